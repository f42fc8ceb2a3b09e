#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "randheap/allocator.hpp"
#include "randheap/heap_walk.hpp"
#include "randheap/memory_source.hpp"

namespace randheap {

struct HeapStats {
  std::uint64_t regions = 0;
  std::uint64_t blocks_busy = 0;  // sentinels excluded, head guards included
  std::uint64_t blocks_free = 0;
  std::uint64_t bytes_busy = 0;
  std::uint64_t bytes_free = 0;
  std::uint64_t largest_free = 0;
  std::uint64_t header_overhead = 0;  // every header, sentinels included
  std::uint64_t reclaimable_interior_pages = 0;

  friend bool operator==(const HeapStats&, const HeapStats&) = default;
};

/// Full walk over the backend's live regions.
template <MemorySource S>
HeapStats snapshot(const Allocator<S>& alloc) {
  const auto codec = alloc.codec();
  const std::uint64_t page = alloc.source().page_size();
  HeapStats st;
  for (const Region& r : alloc.source().live_regions()) {
    ++st.regions;
    walk_region(codec, r, [&](BlockRef b) {
      st.header_overhead += kHeaderSize;
      if (codec.is_sentinel(b)) return;
      const std::uint64_t cap = codec.capacity(b);
      if (codec.is_busy(b)) {
        ++st.blocks_busy;
        st.bytes_busy += cap;
        return;
      }
      ++st.blocks_free;
      st.bytes_free += cap;
      st.largest_free = std::max(st.largest_free, cap);
      const std::uint64_t lo = round_up(data_address(b).value, page);
      const std::uint64_t hi = (data_address(b).value + cap) & ~(page - 1);
      if (hi > lo) st.reclaimable_interior_pages += (hi - lo) / page;
    });
  }
  return st;
}

/// External fragmentation proxy: 1 - largest_free / bytes_free, 0 when nothing is free.
[[nodiscard]] inline double fragmentation(const HeapStats& st) noexcept {
  if (st.bytes_free == 0) return 0.0;
  return 1.0 - static_cast<double>(st.largest_free) / static_cast<double>(st.bytes_free);
}

struct RandomnessReport {
  std::uint64_t trials = 0;
  std::uint64_t distinct_addresses = 0;
  std::map<std::uint64_t, std::uint64_t> histogram;  // region offset -> count
  double min_entropy_bits = 0.0;
};

/// Offsets of the first allocate(64) within its region, one fresh simulated
/// heap per seed in 1..trials.
inline RandomnessReport randomness_probe(AllocConfig config, SourceConfig source_config, std::uint64_t trials) {
  if (trials == 0) throw InvalidArgument("randomness_probe: trials must be >= 1");
  RandomnessReport rep;
  rep.trials = trials;
  for (std::uint64_t seed = 1; seed <= trials; ++seed) {
    config.seed = seed;
    Allocator<SimulatedSource> alloc(config, SimulatedSource(source_config));
    const Address a = alloc.allocate(64);
    const auto region = alloc.source().region_of(a);
    if (!region) throw FatalError("randomness_probe: address outside every region");
    ++rep.histogram[a - region->base];
  }
  std::uint64_t peak = 0;
  for (const auto& [offset, count] : rep.histogram) peak = std::max(peak, count);
  rep.distinct_addresses = rep.histogram.size();
  rep.min_entropy_bits = -std::log2(static_cast<double>(peak) / static_cast<double>(trials));
  if (rep.min_entropy_bits == 0.0) rep.min_entropy_bits = 0.0;  // normalize -0
  return rep;
}

}  // namespace randheap
