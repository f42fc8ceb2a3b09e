#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "randheap/allocator.hpp"
#include "randheap/memory_source.hpp"
#include "randheap/metrics.hpp"
#include "randheap_harness/invariants.hpp"
#include "randheap_harness/model.hpp"
#include "randheap_harness/trace.hpp"

namespace randheap::harness {

struct ReplayOptions {
  AllocConfig alloc{};
  SourceConfig source{};
  /// Compare against the model allocator. Defaults to on exactly when
  /// randomization is off; forcing it on with randomization is an error.
  std::optional<bool> oracle;
  /// Run the invariant suite after every command, not only on `check`.
  bool check_every_step = false;
  /// Enforce the per-call cost bounds on allocate/deallocate.
  bool check_costs = true;
  /// Optional process-wide heap allocation counter, sampled around each
  /// deallocate call.
  std::function<std::uint64_t()> heap_allocation_counter;
};

struct Failure {
  std::size_t line = 0;
  std::string invariant;
  std::string detail;
};

struct CostSummary {
  std::uint64_t allocations = 0;
  std::uint64_t deallocations = 0;
  std::uint64_t max_dealloc_consumes = 0;
  std::uint64_t max_dealloc_list_mutations = 0;
  std::uint64_t max_dealloc_unmaps = 0;
  std::uint64_t max_dealloc_heap_allocations = 0;
  std::uint64_t max_alloc_visits = 0;
  std::uint64_t max_alloc_list_length = 0;
};

struct ExitReport {
  int exit_code = 0;
  bool oracle = false;
  std::size_t commands_run = 0;
  std::size_t checks_run = 0;
  std::vector<std::pair<std::size_t, HeapStats>> stats;  // (trace line, snapshot)
  std::optional<Failure> failure;
  std::vector<Placement> placements;  // one per alloc, in order
  CostSummary costs;
  std::uint64_t final_regions = 0;
  std::uint64_t final_mapped_bytes = 0;
};

namespace detail {

template <MemorySource S>
class Replayer {
 public:
  Replayer(const ReplayOptions& opts, S source)
      : opts_(opts), alloc_(opts.alloc, std::move(source)), model_(opts.source.page_size, opts.source.min_region) {
    rep_.oracle = opts.oracle.value_or(!opts.alloc.randomized());
  }

  ExitReport run(const TraceProgram& prog) {
    if (rep_.oracle && opts_.alloc.randomized()) {
      fail(0, "usage", "oracle comparison requires head_gap_max = 0 and jitter_max = 0");
      return finish();
    }
    for (const auto& tl : prog.commands) {
      try {
        if (!step(tl)) break;
      } catch (const std::exception& e) {
        fail(tl.line, "runtime-error", e.what());
        break;
      }
      ++rep_.commands_run;
      if (opts_.check_every_step && !std::holds_alternative<CheckCmd>(tl.command) && !run_checks(tl.line)) break;
    }
    return finish();
  }

 private:
  bool step(const TraceLine& tl) {
    if (const auto* a = std::get_if<AllocCmd>(&tl.command)) return do_alloc(*a, tl.line);
    if (const auto* f = std::get_if<FreeCmd>(&tl.command)) return do_free(*f, tl.line);
    if (std::holds_alternative<CheckCmd>(tl.command)) return run_checks(tl.line);
    rep_.stats.emplace_back(tl.line, snapshot(alloc_));
    return true;
  }

  bool do_alloc(const AllocCmd& cmd, std::size_t line) {
    const std::uint64_t align = cmd.align.value_or(0);
    const std::uint64_t list_len = opts_.check_costs ? alloc_.free_list().length() : 0;
    const Address a = align != 0 ? alloc_.allocate_aligned(cmd.size, align) : alloc_.allocate(cmd.size);
    const OpCounters cost = alloc_.last_op();

    ++rep_.costs.allocations;
    rep_.costs.max_alloc_visits = std::max(rep_.costs.max_alloc_visits, cost.list_visits);
    rep_.costs.max_alloc_list_length = std::max<std::uint64_t>(rep_.costs.max_alloc_list_length, list_len);
    if (opts_.check_costs && cost.list_visits > list_len)
      return fail(line, "first-fit-bound",
                  std::to_string(cost.list_visits) + " nodes visited, list had " + std::to_string(list_len));

    live_[cmd.id] = LiveAllocation{a, cmd.size, align};
    const Placement p = place(a);
    rep_.placements.push_back(p);
    if (rep_.oracle) {
      const Placement want = model_.allocate(cmd.size, align);
      if (!(want == p)) return fail(line, "oracle-equivalence", "allocator placed " + describe(p) + ", model " + describe(want));
    }
    return true;
  }

  bool do_free(const FreeCmd& cmd, std::size_t line) {
    const auto it = live_.find(cmd.id);
    const Address a = it->second.address;
    const Placement p = place(a);
    live_.erase(it);

    const auto& counter = opts_.heap_allocation_counter;
    const std::uint64_t before = counter ? counter() : 0;
    alloc_.deallocate(a);
    const std::uint64_t heap_allocs = counter ? counter() - before : 0;
    const OpCounters cost = alloc_.last_op();

    auto& c = rep_.costs;
    ++c.deallocations;
    c.max_dealloc_consumes = std::max(c.max_dealloc_consumes, cost.consumes);
    c.max_dealloc_list_mutations = std::max(c.max_dealloc_list_mutations, cost.list_mutations);
    c.max_dealloc_unmaps = std::max(c.max_dealloc_unmaps, cost.unmaps);
    c.max_dealloc_heap_allocations = std::max(c.max_dealloc_heap_allocations, heap_allocs);
    if (opts_.check_costs && (cost.consumes > 2 || cost.list_mutations > 3 || cost.unmaps > 1 || heap_allocs != 0))
      return fail(line, "dealloc-cost",
                  "consumes=" + std::to_string(cost.consumes) + " list_mutations=" + std::to_string(cost.list_mutations) +
                      " unmaps=" + std::to_string(cost.unmaps) + " heap_allocations=" + std::to_string(heap_allocs));

    if (rep_.oracle) model_.deallocate(p.region_serial, p.offset);
    return true;
  }

  bool run_checks(std::size_t line) {
    ++rep_.checks_run;
    std::vector<LiveAllocation> live;
    live.reserve(live_.size());
    for (const auto& [id, a] : live_) live.push_back(a);
    const auto violations = check_heap(alloc_, live);
    if (!violations.empty()) return fail(line, violations.front().invariant, violations.front().detail);
    if (rep_.oracle) {
      const auto got = layout();
      const auto want = model_.layout();
      if (got != want)
        return fail(line, "oracle-equivalence",
                    "heap layout differs from model (" + std::to_string(got.size()) + " vs " +
                        std::to_string(want.size()) + " blocks)");
      std::vector<std::uint64_t> lengths;
      for (const auto& r : alloc_.source().live_regions()) lengths.push_back(r.length);
      if (lengths != model_.region_lengths()) return fail(line, "oracle-equivalence", "region lengths differ from model");
    }
    return true;
  }

  std::vector<ModelBlock> layout() {
    std::vector<ModelBlock> out;
    const auto regions = alloc_.source().live_regions();
    for (const auto& b : walk_heap(alloc_)) {
      if (b.sentinel) continue;
      const Region& r = regions[b.region_index];
      out.push_back({serial_of(r.base), b.header - r.base, b.capacity, b.busy});
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  Placement place(Address a) {
    for (const auto& r : alloc_.source().live_regions())
      if (r.contains(a)) return Placement{serial_of(r.base), a - r.base, alloc_.codec().capacity(block_of(a))};
    throw FatalError("allocation 0x" + hex(a.value) + " lies outside every live region");
  }

  std::uint64_t serial_of(Address base) {
    auto [it, inserted] = serials_.try_emplace(base.value, serials_.size());
    return it->second;
  }

  static std::string describe(const Placement& p) {
    return "region#" + std::to_string(p.region_serial) + "+" + std::to_string(p.offset) + " cap " +
           std::to_string(p.capacity);
  }

  bool fail(std::size_t line, std::string invariant, std::string detail) {
    rep_.failure = Failure{line, std::move(invariant), std::move(detail)};
    return false;
  }

  ExitReport finish() {
    rep_.exit_code = rep_.failure ? 1 : 0;
    rep_.final_regions = alloc_.source().live_regions().size();
    for (const auto& r : alloc_.source().live_regions()) rep_.final_mapped_bytes += r.length;
    return std::move(rep_);
  }

  const ReplayOptions& opts_;
  Allocator<S> alloc_;
  ModelAllocator model_;
  std::map<std::uint64_t, LiveAllocation> live_;
  std::map<std::uint64_t, std::uint64_t> serials_;
  ExitReport rep_;
};

}  // namespace detail

/// Replays `prog` against a fresh allocator over `source`. Exit code 0 iff
/// every check passed.
template <MemorySource S>
ExitReport run_trace(const TraceProgram& prog, const ReplayOptions& opts, S source) {
  detail::Replayer<S> r(opts, std::move(source));
  return r.run(prog);
}

inline ExitReport run_trace(const TraceProgram& prog, const ReplayOptions& opts = {}) {
  return run_trace(prog, opts, SimulatedSource(opts.source));
}

}  // namespace randheap::harness
