#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "randheap_harness/trace.hpp"

namespace randheap::harness {

struct TraceGenOptions {
  std::size_t max_ops = 64;  // alloc + free commands, checks not counted
  std::uint64_t min_size = 1;
  std::uint64_t max_size = 4096;
  /// Alignments drawn for `a` commands; 0 means plain allocation.
  std::vector<std::uint64_t> aligns = {0};
  /// Free everything still live at the end (within max_ops).
  bool free_all = true;
  bool check_after_each = false;
};

/// Random well-formed trace: allocs and frees of random live ids.
inline TraceProgram random_trace(std::mt19937_64& rng, const TraceGenOptions& opt = {}) {
  TraceProgram prog;
  std::vector<std::uint64_t> live;
  std::uint64_t next_id = 1;
  std::size_t line = 0;
  std::uniform_int_distribution<std::uint64_t> size_dist(opt.min_size, opt.max_size);
  std::uniform_int_distribution<std::size_t> align_pick(0, opt.aligns.size() - 1);

  auto push = [&](TraceCommand c) {
    prog.commands.push_back({c, ++line});
    if (opt.check_after_each) prog.commands.push_back({CheckCmd{}, ++line});
  };

  const std::size_t ops = std::uniform_int_distribution<std::size_t>(1, opt.max_ops)(rng);
  std::size_t used = 0;
  while (used < ops && (!opt.free_all || used + live.size() < ops)) {
    const bool do_alloc = live.empty() || std::bernoulli_distribution(0.55)(rng);
    if (do_alloc) {
      AllocCmd a{next_id++, size_dist(rng), std::nullopt};
      if (const auto al = opt.aligns[align_pick(rng)]; al != 0) a.align = al;
      live.push_back(a.id);
      push(a);
    } else {
      const std::size_t k = std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng);
      push(FreeCmd{live[k]});
      live[k] = live.back();
      live.pop_back();
    }
    ++used;
  }
  if (opt.free_all) {
    std::shuffle(live.begin(), live.end(), rng);
    for (auto id : live) push(FreeCmd{id});
  }
  return prog;
}

}  // namespace randheap::harness
