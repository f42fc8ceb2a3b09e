#pragma once

#include <concepts>
#include <cstdint>

#include "randheap/layout.hpp"

namespace randheap {

/// Anything that can read and write little-endian words at an Address.
template <typename M>
concept WordMemory = requires(M m, const M cm, Address a, std::uint64_t v) {
  { cm.load_word(a) } -> std::same_as<std::uint64_t>;
  { m.store_word(a, v) } -> std::same_as<void>;
};

/// Decoded view of one header, for tests and diagnostics.
struct BlockHeader {
  std::uint64_t capacity = 0;
  bool busy = false;
  Address prev_phys;
  Address free_prev;
  Address free_next;

  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

[[nodiscard]] constexpr Address data_address(BlockRef b) noexcept { return b.at + kHeaderSize; }
[[nodiscard]] constexpr BlockRef block_of(Address data) noexcept { return BlockRef{data - kHeaderSize}; }

/// Encodes and decodes control headers in place.
///
/// Wire layout, offsets from the header address:
///   +0  size word: capacity | busy bit (capacity is a multiple of 16)
///   +8  header address of the physically preceding block, 0 for none
///   +16 previous free-list node, 0 for none
///   +24 next free-list node, 0 for none
///
/// A region ends with a sentinel: busy, capacity 0. A busy head-gap guard
/// stores its own address in the +24 word; links are otherwise unused while
/// a block is busy.
template <WordMemory M>
class HeaderCodec {
 public:
  explicit HeaderCodec(M& mem) noexcept : mem_(&mem) {}

  BlockRef write(Address at, std::uint64_t capacity, bool busy, BlockRef prev_phys) const {
    if (at.is_none() || at.value % kQuantum != 0) throw FatalError("write_header: misaligned header address");
    if (capacity % kQuantum != 0) throw FatalError("write_header: capacity is not a multiple of the quantum");
    mem_->store_word(at + kSizeWordOffset, capacity | (busy ? kBusyBit : 0));
    mem_->store_word(at + kPrevPhysOffset, prev_phys.at.value);
    mem_->store_word(at + kFreePrevOffset, 0);
    mem_->store_word(at + kFreeNextOffset, 0);
    return BlockRef{at};
  }

  [[nodiscard]] BlockHeader decode(BlockRef b) const {
    const std::uint64_t size_word = size_word_of(b);
    return BlockHeader{size_word & ~kBusyBit, (size_word & kBusyBit) != 0,
                       Address{mem_->load_word(b.at + kPrevPhysOffset)},
                       Address{mem_->load_word(b.at + kFreePrevOffset)},
                       Address{mem_->load_word(b.at + kFreeNextOffset)}};
  }

  [[nodiscard]] std::uint64_t capacity(BlockRef b) const { return size_word_of(b) & ~kBusyBit; }
  [[nodiscard]] bool is_busy(BlockRef b) const { return (size_word_of(b) & kBusyBit) != 0; }

  void set_capacity(BlockRef b, std::uint64_t capacity) const {
    if (capacity % kQuantum != 0) throw FatalError("set_capacity: capacity is not a multiple of the quantum");
    mem_->store_word(b.at + kSizeWordOffset, capacity | (size_word_of(b) & kBusyBit));
  }

  void set_busy(BlockRef b) const { mem_->store_word(b.at + kSizeWordOffset, size_word_of(b) | kBusyBit); }
  void set_free(BlockRef b) const { mem_->store_word(b.at + kSizeWordOffset, size_word_of(b) & ~kBusyBit); }

  [[nodiscard]] bool is_sentinel(BlockRef b) const { return size_word_of(b) == kBusyBit; }

  [[nodiscard]] bool is_guard(BlockRef b) const {
    return is_busy(b) && mem_->load_word(b.at + kFreeNextOffset) == b.at.value;
  }
  void mark_guard(BlockRef b) const { mem_->store_word(b.at + kFreeNextOffset, b.at.value); }

  [[nodiscard]] BlockRef prev_phys(BlockRef b) const { return load_ref(b, kPrevPhysOffset); }
  void set_prev_phys(BlockRef b, BlockRef p) const { mem_->store_word(b.at + kPrevPhysOffset, p.at.value); }

  [[nodiscard]] BlockRef free_prev(BlockRef b) const { return load_ref(b, kFreePrevOffset); }
  [[nodiscard]] BlockRef free_next(BlockRef b) const { return load_ref(b, kFreeNextOffset); }
  void set_free_prev(BlockRef b, BlockRef p) const { mem_->store_word(b.at + kFreePrevOffset, p.at.value); }
  void set_free_next(BlockRef b, BlockRef n) const { mem_->store_word(b.at + kFreeNextOffset, n.at.value); }

  /// Header of the physically following block. Must not be called on a sentinel.
  [[nodiscard]] BlockRef next_phys(BlockRef b) const { return BlockRef{data_address(b) + capacity(b)}; }

  [[nodiscard]] M& memory() const noexcept { return *mem_; }

 private:
  std::uint64_t size_word_of(BlockRef b) const { return mem_->load_word(b.at + kSizeWordOffset); }
  BlockRef load_ref(BlockRef b, std::uint64_t off) const { return BlockRef{Address{mem_->load_word(b.at + off)}}; }

  M* mem_;
};

}  // namespace randheap
