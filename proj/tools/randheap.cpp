// randheap: replay allocation traces, probe address randomness, self-test.
//
// Exit codes: 0 ok, 1 check failure, 2 usage or parse error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "randheap/metrics.hpp"
#include "randheap/posix_source.hpp"
#include "randheap_harness/replay.hpp"
#include "randheap_harness/report.hpp"
#include "randheap_harness/trace.hpp"
#include "randheap_harness/tracegen.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Backend { sim, real };

Backend backend_from_env() {
  const char* v = std::getenv("RANDHEAP_BACKEND");
  if (v == nullptr || std::string(v).empty() || std::string(v) == "sim") return Backend::sim;
  if (std::string(v) == "real") return Backend::real;
  throw UsageError("RANDHEAP_BACKEND must be 'real' or 'sim'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// key=value lines; recognised keys: page_size, min_region.
void apply_config_file(const std::string& path, randheap::SourceConfig& cfg) {
  std::istringstream in(read_file(path));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::uint64_t value = 0;
    try {
      value = std::stoull(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError(path + ":" + std::to_string(n) + ": bad value");
    }
    if (key == "page_size")
      cfg.page_size = value;
    else if (key == "min_region")
      cfg.min_region = value;
    else
      throw UsageError(path + ":" + std::to_string(n) + ": unknown key '" + key + "'");
  }
}

struct CommonFlags {
  std::uint64_t gap = randheap::AllocConfig{}.head_gap_max;
  std::uint64_t jitter = randheap::AllocConfig{}.jitter_max;
  std::string config_file;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--gap", f.gap, "maximum random head gap per region (bytes, multiple of 16)");
  cmd->add_option("--jitter", f.jitter, "maximum random front split per allocation (bytes, multiple of 16)");
  cmd->add_option("--config", f.config_file, "key=value file with page_size and min_region");
}

int cmd_replay(const std::string& trace_path, const CommonFlags& common, std::uint64_t seed,
               std::uint64_t min_region, bool min_region_set, bool oracle, bool every_step) {
  using namespace randheap;
  harness::ReplayOptions opts;
  if (!common.config_file.empty()) apply_config_file(common.config_file, opts.source);
  if (min_region_set) opts.source.min_region = min_region;
  opts.alloc.seed = seed;
  opts.alloc.head_gap_max = common.gap;
  opts.alloc.jitter_max = common.jitter;
  if (oracle) opts.oracle = true;
  opts.check_every_step = every_step;
  opts.source.validate();
  opts.alloc.validate();
  if (oracle && opts.alloc.randomized()) throw UsageError("--oracle requires --gap 0 --jitter 0");

  harness::TraceProgram prog;
  try {
    prog = harness::parse_trace(read_file(trace_path));
  } catch (const harness::TraceParseError& e) {
    std::cerr << "parse error at " << e.what() << "\n";
    return kExitUsage;
  }

  const auto rep = backend_from_env() == Backend::real
                       ? harness::run_trace(prog, opts, PosixSource(opts.source))
                       : harness::run_trace(prog, opts, SimulatedSource(opts.source));
  std::cout << harness::emit_report(rep);
  return rep.exit_code == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_randcheck(const CommonFlags& common, std::uint64_t trials) {
  using namespace randheap;
  SourceConfig sc;
  if (!common.config_file.empty()) apply_config_file(common.config_file, sc);
  AllocConfig ac;
  ac.head_gap_max = common.gap;
  ac.jitter_max = common.jitter;
  sc.validate();
  ac.validate();
  if (backend_from_env() == Backend::real)
    std::cerr << "note: randcheck measures region offsets on the simulated backend\n";
  std::cout << harness::emit_report(randomness_probe(ac, sc, trials));
  return kExitOk;
}

int cmd_selftest() {
  using namespace randheap;
  bool all_ok = true;
  auto report = [&](const std::string& name, bool ok, const std::string& detail = {}) {
    std::cout << "selftest " << name << ": " << (ok ? "ok" : "FAIL") << (detail.empty() ? "" : " (" + detail + ")")
              << "\n";
    all_ok = all_ok && ok;
  };

  std::mt19937_64 rng(20211001);
  auto sweep = [&](const char* name, harness::ReplayOptions opts, harness::TraceGenOptions gen, int traces) {
    opts.check_every_step = true;
    for (int i = 0; i < traces; ++i) {
      const auto prog = harness::random_trace(rng, gen);
      const auto rep = harness::run_trace(prog, opts);
      if (rep.exit_code != 0 || rep.final_regions != 0) {
        report(name, false, rep.failure ? rep.failure->invariant + ": " + rep.failure->detail : "regions left mapped");
        return;
      }
      opts.alloc.seed++;
    }
    report(name, true, std::to_string(traces) + " traces");
  };

  harness::ReplayOptions plain;
  plain.alloc.head_gap_max = 0;
  plain.alloc.jitter_max = 0;
  sweep("oracle", plain, {}, 300);

  harness::TraceGenOptions aligned_gen;
  aligned_gen.aligns = {0, 16, 32, 64, 256, 4096};
  sweep("oracle-aligned", plain, aligned_gen, 200);

  harness::ReplayOptions randomized;
  randomized.alloc.seed = 1;
  sweep("randomized-invariants", randomized, aligned_gen, 200);

  AllocConfig probe;
  probe.head_gap_max = 1024;
  probe.jitter_max = 0;
  const auto rr = randomness_probe(probe, {}, 1000);
  report("randomness", rr.distinct_addresses >= 50 && rr.min_entropy_bits >= 4.5,
         std::to_string(rr.distinct_addresses) + " distinct, " + harness::detail::fixed(rr.min_entropy_bits, 3) +
             " bits");

  return all_ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randheap: randomized first-fit allocator trace harness"};
  app.require_subcommand(1);

  CommonFlags replay_flags;
  std::string trace_path;
  std::uint64_t seed = 0;
  std::uint64_t min_region = 0;
  bool oracle = false;
  bool every_step = false;
  auto* replay = app.add_subcommand("replay", "replay a trace file against a fresh allocator");
  replay->add_option("trace-file", trace_path, "trace to replay")->required();
  replay->add_option("--seed", seed, "random seed");
  auto* min_region_opt = replay->add_option("--min-region", min_region, "minimum region size (bytes, power of two)");
  replay->add_flag("--oracle", oracle, "compare every placement against the model allocator");
  replay->add_flag("--check-every-step", every_step, "run the invariant suite after every command");
  add_common(replay, replay_flags);

  CommonFlags rand_flags;
  std::uint64_t trials = 1000;
  auto* randcheck = app.add_subcommand("randcheck", "measure first-allocation address spread over seeds");
  randcheck->add_option("--trials", trials, "number of seeds")->check(CLI::PositiveNumber);
  add_common(randcheck, rand_flags);

  auto* selftest = app.add_subcommand("selftest", "run the built-in check battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (replay->parsed())
      return cmd_replay(trace_path, replay_flags, seed, min_region, min_region_opt->count() > 0, oracle, every_step);
    if (randcheck->parsed()) return cmd_randcheck(rand_flags, trials);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const randheap::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
