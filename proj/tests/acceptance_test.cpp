// Acceptance battery: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <new>
#include <random>
#include <string>
#include <vector>

#include "randheap/randheap.hpp"
#include "randheap_harness/invariants.hpp"
#include "randheap_harness/replay.hpp"
#include "randheap_harness/tracegen.hpp"

namespace {

std::atomic<std::uint64_t> g_heap_allocations{0};

}  // namespace

void* operator new(std::size_t n) {
  g_heap_allocations.fetch_add(1, std::memory_order_relaxed);
  if (void* p = std::malloc(n == 0 ? 1 : n)) return p;
  throw std::bad_alloc();
}
void operator delete(void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }

namespace {

using namespace randheap;
using namespace randheap::harness;

constexpr int kOracleTraces = 10000;
constexpr int kRandomizedTraces = 1000;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr std::uint64_t kProbeTrials = 1000;
constexpr std::uint64_t kMinDistinct = 50;
constexpr double kMinEntropyBits = 4.5;
constexpr int kAlignedRequests = 1000;

struct Verdict {
  std::string name;
  bool ok = false;
  std::string detail;
};

std::map<int, Verdict> g_verdicts;

void verdict(int id, const char* name, bool ok, const std::string& detail) { g_verdicts[id] = {name, ok, detail}; }

std::string why(const ExitReport& rep) {
  return rep.failure ? "line " + std::to_string(rep.failure->line) + " " + rep.failure->invariant + ": " +
                           rep.failure->detail
                     : "final_regions=" + std::to_string(rep.final_regions);
}

ReplayOptions plain_options() {
  ReplayOptions o;
  o.alloc.head_gap_max = 0;
  o.alloc.jitter_max = 0;
  o.heap_allocation_counter = [] { return g_heap_allocations.load(std::memory_order_relaxed); };
  return o;
}

struct Corpus {
  std::vector<TraceProgram> oracle;
  std::vector<TraceProgram> randomized;
};

Corpus build_corpus() {
  Corpus c;
  std::mt19937_64 rng(0x5eed);
  for (int i = 0; i < kOracleTraces; ++i) c.oracle.push_back(random_trace(rng));
  TraceGenOptions gen;
  gen.aligns = {0, 0, 0, 16, 32, 64, 256, 4096};
  for (int i = 0; i < kRandomizedTraces; ++i) c.randomized.push_back(random_trace(rng, gen));
  return c;
}

// Criteria 1-4 and 7 share the corpus. Criterion 1 compares placements and the
// full layout against the model after every step.
void corpus_criteria(const Corpus& corpus) {
  ReplayOptions o = plain_options();
  o.check_every_step = true;
  int oracle_fail = 0;
  std::string first_oracle;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& prog : corpus.oracle) {
    const auto rep = run_trace(prog, o);
    if (rep.exit_code != 0 && oracle_fail++ == 0) first_oracle = why(rep);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  verdict(1, "oracle-equivalence", oracle_fail == 0 && secs < kOracleBudgetSeconds,
          std::to_string(corpus.oracle.size()) + " traces, " + std::to_string(oracle_fail) + " mismatches, " +
              std::to_string(secs) + " s" + (first_oracle.empty() ? "" : "; first: " + first_oracle));

  int inv_fail = 0;
  int cost_fail = 0;
  int bound_fail = 0;
  int leak_fail = 0;
  std::string first_inv;
  CostSummary worst;
  std::uint64_t runs = 0;
  auto sweep = [&](const std::vector<TraceProgram>& progs, ReplayOptions opts) {
    opts.check_every_step = true;
    for (const auto& prog : progs) {
      const auto rep = run_trace(prog, opts);
      ++runs;
      ++opts.alloc.seed;
      worst.max_dealloc_consumes = std::max(worst.max_dealloc_consumes, rep.costs.max_dealloc_consumes);
      worst.max_dealloc_list_mutations =
          std::max(worst.max_dealloc_list_mutations, rep.costs.max_dealloc_list_mutations);
      worst.max_dealloc_unmaps = std::max(worst.max_dealloc_unmaps, rep.costs.max_dealloc_unmaps);
      worst.max_dealloc_heap_allocations =
          std::max(worst.max_dealloc_heap_allocations, rep.costs.max_dealloc_heap_allocations);
      if (rep.final_regions != 0 || rep.final_mapped_bytes != 0) ++leak_fail;
      if (!rep.failure) continue;
      if (rep.failure->invariant == "dealloc-cost")
        ++cost_fail;
      else if (rep.failure->invariant == "first-fit-bound")
        ++bound_fail;
      else if (inv_fail++ == 0)
        first_inv = why(rep);
    }
  };
  sweep(corpus.oracle, o);
  ReplayOptions r = o;
  r.alloc.head_gap_max = 1024;
  r.alloc.jitter_max = 256;
  r.alloc.seed = 1;
  sweep(corpus.randomized, r);

  verdict(2, "invariants-every-step", inv_fail == 0,
          std::to_string(runs) + " traces, " + std::to_string(inv_fail) + " failing" +
              (first_inv.empty() ? "" : "; first: " + first_inv));
  verdict(3, "dealloc-cost", cost_fail == 0 && worst.max_dealloc_consumes <= 2 &&
                                 worst.max_dealloc_list_mutations <= 3 && worst.max_dealloc_unmaps <= 1 &&
                                 worst.max_dealloc_heap_allocations == 0,
          "max consumes=" + std::to_string(worst.max_dealloc_consumes) +
              " list_mutations=" + std::to_string(worst.max_dealloc_list_mutations) +
              " unmaps=" + std::to_string(worst.max_dealloc_unmaps) +
              " heap_allocations=" + std::to_string(worst.max_dealloc_heap_allocations));
  verdict(4, "first-fit-bound", bound_fail == 0, std::to_string(bound_fail) + " violations");
  verdict(7, "full-release", leak_fail == 0, std::to_string(leak_fail) + " traces left memory mapped");
}

void randomness_criterion() {
  AllocConfig on;
  on.head_gap_max = 1024;
  on.jitter_max = 0;
  const auto rr = randomness_probe(on, {}, kProbeTrials);
  AllocConfig off;
  off.head_gap_max = 0;
  off.jitter_max = 0;
  const auto rr_off = randomness_probe(off, {}, kProbeTrials);
  verdict(5, "randomness",
          rr.distinct_addresses >= kMinDistinct && rr.min_entropy_bits >= kMinEntropyBits &&
              rr_off.distinct_addresses == 1,
          std::to_string(rr.distinct_addresses) + " distinct, " + std::to_string(rr.min_entropy_bits) +
              " bits; off: " + std::to_string(rr_off.distinct_addresses) + " distinct");
}

void alignment_criterion() {
  constexpr std::array<std::uint64_t, 5> kAligns{16, 32, 64, 256, 4096};
  std::mt19937_64 rng(0xa11);
  int bad = 0;
  std::string first;
  for (const bool randomized : {false, true}) {
    AllocConfig cfg;
    cfg.seed = 3;
    if (!randomized) cfg.head_gap_max = cfg.jitter_max = 0;
    Allocator<SimulatedSource> heap(cfg, SimulatedSource{});
    std::vector<LiveAllocation> live;
    for (int i = 0; i < kAlignedRequests; ++i) {
      if (!live.empty() && rng() % 3 == 0) {
        const std::size_t k = rng() % live.size();
        heap.deallocate(live[k].address);
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        const std::uint64_t align = kAligns[rng() % kAligns.size()];
        const std::uint64_t size = rng() % 4096 + 1;
        const Address a = heap.allocate_aligned(size, align);
        if (a.value % align != 0) ++bad;
        live.push_back({a, size, align});
      }
      const auto v = check_heap(heap, live);
      if (!v.empty() && bad++ == 0) first = v.front().invariant + ": " + v.front().detail;
    }
    for (const auto& a : live) heap.deallocate(a.address);
    if (heap.source().live_region_count() != 0) ++bad;
  }
  verdict(6, "aligned-allocation", bad == 0,
          std::to_string(2 * kAlignedRequests) + " requests, " + std::to_string(bad) + " problems" +
              (first.empty() ? "" : "; first: " + first));
}

void header_criterion() {
  SimulatedSource src;
  const Region r = src.map_region(1);
  HeaderCodec<SimulatedSource> codec(src);
  bool ok = true;

  const Address prev = r.base + 0x40;
  const BlockRef b = codec.write(r.base + 0x100, 112, true, BlockRef{prev});
  codec.set_free_prev(b, BlockRef{r.base + 0x200});
  codec.set_free_next(b, kNoBlock);
  std::array<std::byte, 32> raw{};
  src.read_bytes(b.at, raw);
  std::array<std::uint64_t, 4> want{112 | 1, prev.value, r.base.value + 0x200, 0};
  for (std::size_t w = 0; w < 4; ++w)
    for (std::size_t i = 0; i < 8; ++i)
      if (std::to_integer<std::uint64_t>(raw[w * 8 + i]) != ((want[w] >> (8 * i)) & 0xff)) ok = false;

  int checked = 0;
  for (std::uint64_t cap = 0; cap <= 4096; cap += 16)
    for (const bool busy : {false, true}) {
      const BlockRef h = codec.write(r.base + 0x400, cap, busy, kNoBlock);
      const auto d = codec.decode(h);
      if (d.capacity != cap || d.busy != busy || codec.is_busy(h) != busy || codec.capacity(h) != cap) ok = false;
      ++checked;
    }
  verdict(8, "header-layout", ok, "golden layout plus " + std::to_string(checked) + " capacity/busy round trips");
}

void mutation_criterion(const Corpus& corpus) {
  struct Mutant {
    const char* name;
    FaultInjection faults;
  };
  const Mutant mutants[] = {
      {"skip_right_merge", {.skip_right_merge = true}},
      {"skip_left_merge", {.skip_left_merge = true}},
      {"skip_split_threshold", {.skip_split_threshold = true}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& m : mutants) {
    ReplayOptions o = plain_options();
    o.alloc.faults = m.faults;
    o.check_every_step = true;
    std::size_t caught_at = 0;
    for (std::size_t i = 0; i < corpus.oracle.size() && caught_at == 0; ++i)
      if (run_trace(corpus.oracle[i], o).exit_code != 0) caught_at = i + 1;
    ok = ok && caught_at != 0;
    detail += std::string(detail.empty() ? "" : ", ") + m.name +
              (caught_at ? " caught by trace " + std::to_string(caught_at) : " survived");
  }
  verdict(9, "mutation-sensitivity", ok, detail);
}

}  // namespace

int main() {
  const Corpus corpus = build_corpus();
  corpus_criteria(corpus);
  randomness_criterion();
  alignment_criterion();
  header_criterion();
  mutation_criterion(corpus);
  int failed = 0;
  for (const auto& [id, v] : g_verdicts) {
    std::printf("criterion %d %s: %s (%s)\n", id, v.name.c_str(), v.ok ? "PASS" : "FAIL", v.detail.c_str());
    failed += v.ok ? 0 : 1;
  }
  std::printf("%s: %d criteria failed\n", failed == 0 ? "PASS" : "FAIL", failed);
  return failed == 0 ? 0 : 1;
}
