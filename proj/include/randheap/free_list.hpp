#pragma once

#include <cstddef>
#include <cstdint>

#include "randheap/block_header.hpp"

namespace randheap {

struct FreeListCounters {
  std::uint64_t mutations = 0;  // inserts + removes
  std::uint64_t visits = 0;     // nodes inspected by searches
};

/// Intrusive doubly-linked list of free blocks threaded through their
/// headers. Its only state is the reference to the first node; new nodes
/// go to the front.
template <WordMemory M>
class FreeList {
 public:
  explicit FreeList(HeaderCodec<M> codec) noexcept : codec_(codec) {}

  [[nodiscard]] BlockRef first() const noexcept { return first_; }
  [[nodiscard]] bool empty() const noexcept { return first_.is_none(); }

  void insert(BlockRef b) {
    if (codec_.is_busy(b)) throw FatalError("free list: inserting a busy block");
    codec_.set_free_prev(b, kNoBlock);
    codec_.set_free_next(b, first_);
    if (first_) codec_.set_free_prev(first_, b);
    first_ = b;
    ++counters_.mutations;
  }

  void remove(BlockRef b) {
    const BlockRef prev = codec_.free_prev(b);
    const BlockRef next = codec_.free_next(b);
    if (prev)
      codec_.set_free_next(prev, next);
    else
      first_ = next;
    if (next) codec_.set_free_prev(next, prev);
    codec_.set_free_prev(b, kNoBlock);
    codec_.set_free_next(b, kNoBlock);
    ++counters_.mutations;
  }

  /// First node, in list order, for which `accept(block, capacity)` holds.
  template <typename Accept>
  BlockRef find_if(Accept&& accept) {
    for (BlockRef b = first_; b; b = codec_.free_next(b)) {
      ++counters_.visits;
      if (accept(b, codec_.capacity(b))) return b;
    }
    return kNoBlock;
  }

  BlockRef find_first_fit(std::uint64_t need) {
    return find_if([need](BlockRef, std::uint64_t capacity) { return capacity >= need; });
  }

  /// Number of nodes; walks the list.
  [[nodiscard]] std::size_t length() const {
    std::size_t n = 0;
    for (BlockRef b = first_; b; b = codec_.free_next(b)) ++n;
    return n;
  }

  [[nodiscard]] const FreeListCounters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = {}; }

 private:
  HeaderCodec<M> codec_;
  BlockRef first_;
  FreeListCounters counters_;
};

}  // namespace randheap
