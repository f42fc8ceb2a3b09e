#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>

#include "randheap/block_header.hpp"
#include "randheap/free_list.hpp"
#include "randheap/layout.hpp"
#include "randheap/memory_source.hpp"

namespace randheap {

/// Deliberate defects for mutation testing of the invariant checks.
/// Never enable outside tests.
struct FaultInjection {
  bool skip_left_merge = false;
  bool skip_right_merge = false;
  /// Split whenever a remainder header physically fits, even with a zero data part.
  bool skip_split_threshold = false;
};

struct AllocConfig {
  /// Upper bound of the random guard gap placed at the start of each region. 0 disables.
  std::uint64_t head_gap_max = 1024;
  /// Upper bound of the random free block carved in front of each allocation. 0 disables.
  std::uint64_t jitter_max = 256;
  std::uint64_t seed = 0;
  FaultInjection faults{};

  void validate() const {
    if (head_gap_max % kQuantum != 0 || jitter_max % kQuantum != 0)
      throw InvalidArgument("head_gap_max and jitter_max must be multiples of the quantum");
  }

  [[nodiscard]] bool randomized() const noexcept { return head_gap_max != 0 || jitter_max != 0; }
};

/// Cost of the most recent allocate/deallocate call.
struct OpCounters {
  std::uint64_t consumes = 0;
  std::uint64_t list_mutations = 0;
  std::uint64_t list_visits = 0;
  std::uint64_t maps = 0;
  std::uint64_t unmaps = 0;
};

/// Thrown by destroy() when busy blocks are still present.
class LiveAllocationsRemain : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seedable stream for gap and jitter draws.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  /// Uniform over the gap sizes that change the layout: 0 and every quantum
  /// multiple from kMinSplit to `max`. Gaps of 16 or 32 cannot hold a header
  /// and would alias 0.
  std::uint64_t draw_gap(std::uint64_t max) {
    if (max < kMinSplit) return 0;
    const std::uint64_t choices = 1 + (max - kMinSplit) / kQuantum + 1;
    const std::uint64_t k = below(choices);
    return k == 0 ? 0 : kMinSplit + (k - 1) * kQuantum;
  }

 private:
  std::mt19937_64 engine_;
};

/// Randomized first-fit allocator over a page-mapping backend.
///
/// The only structural state is the free-list head. Regions are found
/// through free blocks and physical chains; the backend's registry is used
/// only by destroy(). Not thread-safe: confine an instance to one thread at
/// a time, or wrap it in LockedAllocator.
template <MemorySource Source>
class Allocator {
 public:
  explicit Allocator(AllocConfig config = {}, Source source = Source{})
      : config_(config), source_(std::move(source)), rng_(config.seed) {
    config_.validate();
  }

  static Allocator create(AllocConfig config, Source source) { return Allocator(config, std::move(source)); }

  Allocator(const Allocator&) = delete;
  Allocator& operator=(const Allocator&) = delete;
  Allocator(Allocator&&) = delete;
  Allocator& operator=(Allocator&&) = delete;

  ~Allocator() {
    try {
      destroy(true);
    } catch (...) {
    }
  }

  Address allocate(std::uint64_t n) {
    begin_op();
    const std::uint64_t need = request_size(n);
    BlockRef b = list_.find_first_fit(need);
    if (!b) b = grow(need);
    list_.remove(b);
    if (config_.jitter_max != 0) b = jitter_split(b, need);
    return finish_op(take(b, need));
  }

  Address allocate_aligned(std::uint64_t n, std::uint64_t align) {
    if (!is_power_of_two(align)) throw InvalidArgument("alignment must be a power of two");
    if (align <= kQuantum) return allocate(n);

    begin_op();
    const std::uint64_t need = request_size(n);
    std::uint64_t shift = 0;
    BlockRef b = list_.find_if([&](BlockRef cand, std::uint64_t cap) {
      auto s = aligned_shift(cand, cap, need, align);
      if (s) shift = *s;
      return s.has_value();
    });
    if (!b) {
      const std::uint64_t slack = kMinSplit + align;
      if (need > UINT64_MAX - slack) throw OutOfMemory("aligned request too large");
      b = grow(need + slack);
      auto s = aligned_shift(b, codec_.capacity(b), need, align);
      if (!s) throw FatalError("grown block cannot satisfy alignment");
      shift = *s;
    }
    list_.remove(b);
    if (shift != 0) b = carve_front(b, shift);
    return finish_op(take(b, need));
  }

  void deallocate(Address data) {
    begin_op();
    BlockRef cur = block_of(data);
    codec_.set_free(cur);
    bool listed = false;

    const BlockRef left = codec_.prev_phys(cur);
    if (left && !config_.faults.skip_left_merge && !codec_.is_busy(left)) {
      absorb_next(left);
      cur = left;
      listed = true;
    }
    const BlockRef right = codec_.next_phys(cur);
    if (!config_.faults.skip_right_merge && !codec_.is_busy(right)) {
      list_.remove(right);
      absorb_next(cur);
    }

    if (auto region = spanned_region(cur)) {
      if (listed) list_.remove(cur);
      source_.unmap_region(*region);
      ++counters_.unmaps;
    } else if (!listed) {
      list_.insert(cur);
    }
    finish_op(Address{});
  }

  /// Unmaps every live region of the backend. Without `force`, refuses if
  /// any region still holds an allocation.
  void destroy(bool force = false) {
    const auto regions = source_.live_regions();
    if (!force) {
      for (const Region& r : regions) {
        for (BlockRef b{r.base}; !codec_.is_sentinel(b); b = codec_.next_phys(b)) {
          if (codec_.is_busy(b) && !codec_.is_guard(b))
            throw LiveAllocationsRemain("destroy: live allocations remain");
        }
      }
    }
    for (const Region& r : regions) source_.unmap_region(r);
    list_ = FreeList<Source>(codec_);
  }

  // Building blocks. Public so they can be exercised one at a time.

  /// Maps a fresh region for a `need`-byte block and returns its main free
  /// block, already in the free list. Draws the head gap from the stream.
  BlockRef grow(std::uint64_t need) { return grow(need, rng_.draw_gap(config_.head_gap_max)); }

  BlockRef grow(std::uint64_t need, std::uint64_t gap) {
    const std::uint64_t fixed = 3 * kHeaderSize + config_.head_gap_max;
    if (gap > config_.head_gap_max) throw InvalidArgument("grow: gap exceeds head_gap_max");
    if (need > UINT64_MAX - fixed) throw OutOfMemory("grow: request too large");
    const Region r = source_.map_region(fixed + need);
    ++counters_.maps;

    BlockRef main;
    if (gap >= kMinSplit) {
      const BlockRef guard = codec_.write(r.base, gap - kHeaderSize, true, kNoBlock);
      codec_.mark_guard(guard);
      main = codec_.write(r.base + gap, r.length - gap - 2 * kHeaderSize, false, guard);
    } else {
      main = codec_.write(r.base, r.length - 2 * kHeaderSize, false, kNoBlock);
    }
    codec_.write(r.end() - kHeaderSize, 0, true, main);
    list_.insert(main);
    return main;
  }

  /// Cuts a `need`-byte front off free block `b`. Returns the free
  /// remainder (not inserted into the list), or none when the leftover
  /// cannot hold a header plus a non-empty data part.
  BlockRef split(BlockRef b, std::uint64_t need) {
    const std::uint64_t cap = codec_.capacity(b);
    const std::uint64_t threshold = config_.faults.skip_split_threshold ? kHeaderSize : kMinSplit;
    if (cap < need || cap - need < threshold) return kNoBlock;

    const BlockRef successor = codec_.next_phys(b);
    const BlockRef rest = codec_.write(data_address(b) + need, cap - need - kHeaderSize, false, b);
    codec_.set_prev_phys(successor, rest);
    codec_.set_capacity(b, need);
    return rest;
  }

  /// Merges the free physical successor of free block `b` into `b`.
  void consume_right(BlockRef b) {
    list_.remove(codec_.next_phys(b));
    absorb_next(b);
  }

  /// `b` must be free and detached from the list. Draws a jitter size and,
  /// if it fits, carves a free block of that size in front of `b`.
  BlockRef jitter_split(BlockRef b, std::uint64_t need) {
    return jitter_split(b, need, rng_.draw_gap(config_.jitter_max));
  }

  BlockRef jitter_split(BlockRef b, std::uint64_t need, std::uint64_t draw) {
    if (draw < kMinSplit) return b;
    const std::uint64_t cap = codec_.capacity(b);
    if (cap < need || cap - need < draw + kMinSplit) return b;
    return carve_front(b, draw);
  }

  // Introspection.

  [[nodiscard]] const AllocConfig& config() const noexcept { return config_; }
  [[nodiscard]] Source& source() noexcept { return source_; }
  [[nodiscard]] const Source& source() const noexcept { return source_; }
  [[nodiscard]] HeaderCodec<Source> codec() const noexcept { return codec_; }
  [[nodiscard]] const FreeList<Source>& free_list() const noexcept { return list_; }
  /// Direct list access for driving the building blocks by hand.
  [[nodiscard]] FreeList<Source>& free_list() noexcept { return list_; }
  [[nodiscard]] BlockRef free_head() const noexcept { return list_.first(); }
  [[nodiscard]] const OpCounters& last_op() const noexcept { return counters_; }

 private:
  static std::uint64_t request_size(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("allocation size must be > 0");
    const std::uint64_t need = round_up(n, kQuantum);
    if (need == 0 || need > (UINT64_MAX >> 2)) throw OutOfMemory("allocation size too large");
    return need;
  }

  /// Smallest shift of `b`'s header that aligns its data to `align` and
  /// leaves room for a front free block, if `b` can still hold `need` bytes.
  static std::optional<std::uint64_t> aligned_shift(BlockRef b, std::uint64_t cap, std::uint64_t need,
                                                    std::uint64_t align) {
    const std::uint64_t d = data_address(b).value;
    std::uint64_t s = (align - (d & (align - 1))) & (align - 1);
    if (s != 0 && s < kMinSplit) s += round_up(kMinSplit - s, align);
    if (cap < need || cap - need < s) return std::nullopt;
    return s;
  }

  /// `b` free and detached. Leaves a free block of `shift - kHeaderSize`
  /// bytes at `b` (inserted into the list) and returns the detached block
  /// that now starts `shift` bytes later.
  BlockRef carve_front(BlockRef b, std::uint64_t shift) {
    const std::uint64_t cap = codec_.capacity(b);
    const BlockRef successor = codec_.next_phys(b);
    const BlockRef moved = codec_.write(b.at + shift, cap - shift, false, b);
    codec_.set_prev_phys(successor, moved);
    codec_.set_capacity(b, shift - kHeaderSize);
    list_.insert(b);
    return moved;
  }

  /// `b` detached from the list. Splits off the surplus and marks `b` busy.
  Address take(BlockRef b, std::uint64_t need) {
    if (const BlockRef rest = split(b, need)) list_.insert(rest);
    codec_.set_busy(b);
    return data_address(b);
  }

  void absorb_next(BlockRef b) {
    const BlockRef next = codec_.next_phys(b);
    codec_.set_capacity(b, codec_.capacity(b) + kHeaderSize + codec_.capacity(next));
    codec_.set_prev_phys(codec_.next_phys(b), b);
    ++counters_.consumes;
  }

  /// The region, if free block `b` plus an optional head guard fill it entirely.
  std::optional<Region> spanned_region(BlockRef b) const {
    const BlockRef sentinel = codec_.next_phys(b);
    if (!codec_.is_sentinel(sentinel)) return std::nullopt;
    BlockRef first = b;
    if (const BlockRef p = codec_.prev_phys(b)) {
      if (!codec_.is_guard(p) || codec_.prev_phys(p)) return std::nullopt;
      first = p;
    }
    return Region{first.at, (sentinel.at + kHeaderSize) - first.at, Source::tag()};
  }

  void begin_op() noexcept {
    counters_ = {};
    list_.reset_counters();
  }

  Address finish_op(Address result) noexcept {
    counters_.list_mutations = list_.counters().mutations;
    counters_.list_visits = list_.counters().visits;
    return result;
  }

  AllocConfig config_;
  Source source_;
  HeaderCodec<Source> codec_{source_};
  FreeList<Source> list_{codec_};
  RandomStream rng_;
  OpCounters counters_;
};

}  // namespace randheap
