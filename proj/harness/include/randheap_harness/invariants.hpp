#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "randheap/allocator.hpp"
#include "randheap/heap_walk.hpp"

namespace randheap::harness {

inline std::string hex(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  do {
    s.insert(s.begin(), kDigits[v & 0xF]);
    v >>= 4;
  } while (v != 0);
  return s;
}

struct Violation {
  std::string invariant;
  std::string detail;
};

/// An allocation the caller believes is live.
struct LiveAllocation {
  Address address;
  std::uint64_t size = 0;
  std::uint64_t align = 0;  // 0 when unconstrained
};

/// One block seen by a heap walk.
struct WalkedBlock {
  std::uint64_t region_index = 0;  // position in live_regions()
  Address header;
  std::uint64_t capacity = 0;
  bool busy = false;
  bool guard = false;
  bool sentinel = false;
};

template <MemorySource S>
std::vector<WalkedBlock> walk_heap(const Allocator<S>& alloc, std::vector<Violation>* violations = nullptr) {
  std::vector<WalkedBlock> out;
  const auto codec = alloc.codec();
  const auto regions = alloc.source().live_regions();
  for (std::uint64_t i = 0; i < regions.size(); ++i) {
    const std::size_t mark = out.size();
    try {
      walk_region(codec, regions[i], [&](BlockRef b) {
        out.push_back({i, b.at, codec.capacity(b), codec.is_busy(b), codec.is_guard(b), codec.is_sentinel(b)});
      });
    } catch (const std::exception& e) {
      out.resize(mark);
      if (violations) violations->push_back({"chain-closure", e.what()});
    }
  }
  return out;
}

/// Runs the structural invariant suite over every live region:
/// chain closure, conservation, no adjacent free blocks, zero capacity only
/// on sentinels, free list / heap walk agreement, and that every live
/// allocation sits in its own busy block.
template <MemorySource S>
std::vector<Violation> check_heap(const Allocator<S>& alloc, const std::vector<LiveAllocation>& live) {
  std::vector<Violation> out;
  const auto codec = alloc.codec();
  const auto regions = alloc.source().live_regions();
  const auto blocks = walk_heap(alloc, &out);
  if (!out.empty()) return out;

  // Conservation, adjacency, zero capacity.
  std::vector<std::uint64_t> used(regions.size(), 0);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const auto& b = blocks[k];
    used[b.region_index] += kHeaderSize + b.capacity;
    if (b.capacity == 0 && !b.sentinel)
      out.push_back({"zero-capacity", "non-sentinel block with capacity 0 at 0x" + hex(b.header.value)});
    if (k + 1 < blocks.size() && blocks[k + 1].region_index == b.region_index && !b.busy && !blocks[k + 1].busy)
      out.push_back({"no-adjacent-free", "free blocks at 0x" + hex(b.header.value) + " and 0x" + hex(blocks[k + 1].header.value)});
  }
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (used[i] != regions[i].length)
      out.push_back({"conservation", "region " + std::to_string(i) + " accounts for " + std::to_string(used[i]) +
                                         " of " + std::to_string(regions[i].length) + " bytes"});

  // Free list versus heap walk.
  std::vector<std::uint64_t> walked_free;
  for (const auto& b : blocks)
    if (!b.busy) walked_free.push_back(b.header.value);
  std::sort(walked_free.begin(), walked_free.end());

  std::vector<std::uint64_t> listed;
  BlockRef prev = kNoBlock;
  for (BlockRef b = alloc.free_head(); b; b = codec.free_next(b)) {
    if (listed.size() > walked_free.size()) {
      out.push_back({"list-walk-agreement", "free list longer than the number of free blocks (cycle?)"});
      break;
    }
    if (!std::binary_search(walked_free.begin(), walked_free.end(), b.at.value)) {
      out.push_back({"list-walk-agreement", "listed node 0x" + hex(b.at.value) + " is not a free block"});
      break;
    }
    if (codec.free_prev(b) != prev) out.push_back({"list-walk-agreement", "asymmetric links at 0x" + hex(b.at.value)});
    listed.push_back(b.at.value);
    prev = b;
  }
  std::sort(listed.begin(), listed.end());
  if (out.empty() && listed != walked_free)
    out.push_back({"list-walk-agreement", std::to_string(walked_free.size()) + " free blocks walked, " +
                                              std::to_string(listed.size()) + " listed"});

  // Live allocations: each in a distinct busy, non-guard block that is large enough.
  std::vector<std::uint64_t> busy_headers;
  std::vector<std::uint64_t> busy_caps;
  for (const auto& b : blocks) {
    if (b.busy && !b.guard && !b.sentinel) {
      busy_headers.push_back(b.header.value);
      busy_caps.push_back(b.capacity);
    }
  }
  std::vector<std::uint64_t> seen;
  for (const auto& a : live) {
    const std::uint64_t h = block_of(a.address).at.value;
    auto it = std::lower_bound(busy_headers.begin(), busy_headers.end(), h);
    if (it == busy_headers.end() || *it != h) {
      out.push_back({"address-validity", "0x" + hex(a.address.value) + " is not the data of a busy block"});
      continue;
    }
    const auto cap = busy_caps[static_cast<std::size_t>(it - busy_headers.begin())];
    if (cap < a.size)
      out.push_back({"address-validity", "block at 0x" + hex(h) + " holds " + std::to_string(cap) + " < " + std::to_string(a.size)});
    if (a.align != 0 && a.address.value % a.align != 0)
      out.push_back({"address-validity", "0x" + hex(a.address.value) + " is not aligned to " + std::to_string(a.align)});
    seen.push_back(h);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    out.push_back({"address-validity", "two live allocations share a block"});
  if (busy_headers.size() != live.size())
    out.push_back({"address-validity", std::to_string(busy_headers.size()) + " busy blocks for " +
                                           std::to_string(live.size()) + " live allocations"});
  return out;
}

}  // namespace randheap::harness
