#pragma once

#include <cstdio>
#include <string>

#include "randheap/metrics.hpp"
#include "randheap_harness/replay.hpp"

namespace randheap::harness {

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// Machine-readable single-line stats record.
inline std::string stats_record(const HeapStats& st) {
  return "#R regions=" + std::to_string(st.regions) + ",blocks_busy=" + std::to_string(st.blocks_busy) +
         ",blocks_free=" + std::to_string(st.blocks_free) + ",bytes_busy=" + std::to_string(st.bytes_busy) +
         ",bytes_free=" + std::to_string(st.bytes_free) + ",largest_free=" + std::to_string(st.largest_free) +
         ",header_overhead=" + std::to_string(st.header_overhead) +
         ",reclaimable_interior_pages=" + std::to_string(st.reclaimable_interior_pages) +
         ",fragmentation=" + detail::fixed(fragmentation(st), 6) + "\n";
}

/// Human-readable key=value block.
inline std::string stats_block(const HeapStats& st) {
  return "regions=" + std::to_string(st.regions) + "\nblocks_busy=" + std::to_string(st.blocks_busy) +
         "\nblocks_free=" + std::to_string(st.blocks_free) + "\nbytes_busy=" + std::to_string(st.bytes_busy) +
         "\nbytes_free=" + std::to_string(st.bytes_free) + "\nlargest_free=" + std::to_string(st.largest_free) +
         "\nheader_overhead=" + std::to_string(st.header_overhead) +
         "\nreclaimable_interior_pages=" + std::to_string(st.reclaimable_interior_pages) +
         "\nfragmentation=" + detail::fixed(fragmentation(st), 6) + "\n";
}

inline std::string emit_report(const ExitReport& rep) {
  std::string out;
  for (const auto& [line, st] : rep.stats) {
    out += "stats line=" + std::to_string(line) + "\n";
    out += stats_block(st);
    out += stats_record(st);
  }
  if (rep.failure)
    out += "FAIL line=" + std::to_string(rep.failure->line) + " invariant=" + rep.failure->invariant + ": " +
           rep.failure->detail + "\n";
  const auto& c = rep.costs;
  out += std::string("#R result=") + (rep.exit_code == 0 ? "ok" : "fail") +
         ",oracle=" + (rep.oracle ? "on" : "off") + ",commands=" + std::to_string(rep.commands_run) +
         ",checks=" + std::to_string(rep.checks_run) + ",allocs=" + std::to_string(c.allocations) +
         ",frees=" + std::to_string(c.deallocations) + ",max_free_consumes=" + std::to_string(c.max_dealloc_consumes) +
         ",max_free_list_mutations=" + std::to_string(c.max_dealloc_list_mutations) +
         ",max_free_unmaps=" + std::to_string(c.max_dealloc_unmaps) +
         ",max_alloc_visits=" + std::to_string(c.max_alloc_visits) +
         ",final_regions=" + std::to_string(rep.final_regions) +
         ",final_mapped_bytes=" + std::to_string(rep.final_mapped_bytes) + "\n";
  return out;
}

/// Histogram lines in ascending offset order, then the summary record.
inline std::string emit_report(const RandomnessReport& rep) {
  std::string out;
  for (const auto& [offset, count] : rep.histogram)
    out += "#R offset=" + std::to_string(offset) + ",count=" + std::to_string(count) + "\n";
  out += "#R trials=" + std::to_string(rep.trials) + ",distinct_addresses=" + std::to_string(rep.distinct_addresses) +
         ",min_entropy_bits=" + detail::fixed(rep.min_entropy_bits, 4) + "\n";
  return out;
}

}  // namespace randheap::harness
