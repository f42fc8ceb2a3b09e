#pragma once

#include <sys/mman.h>
#include <unistd.h>

#include <cstring>
#include <map>
#include <span>
#include <vector>

#include "randheap/memory_source.hpp"

namespace randheap {

/// Page mapper backed by mmap(2)/munmap(2). Addresses are host pointers.
///
/// Keeps a registry of live mappings so that destroy() can find regions
/// that hold no free block.
class PosixSource {
 public:
  explicit PosixSource(SourceConfig config = {}) : config_(config) {
    config_.validate();
    const long os_page = ::sysconf(_SC_PAGESIZE);
    if (os_page > 0 && config_.page_size % static_cast<std::uint64_t>(os_page) != 0)
      throw InvalidArgument("page_size must be a multiple of the OS page size");
  }

  PosixSource(PosixSource&& other) noexcept
      : config_(other.config_), live_(std::move(other.live_)) {
    other.live_.clear();
  }
  PosixSource& operator=(PosixSource&&) = delete;
  PosixSource(const PosixSource&) = delete;
  PosixSource& operator=(const PosixSource&) = delete;

  ~PosixSource() {
    for (const auto& [base, length] : live_)
      ::munmap(reinterpret_cast<void*>(base), length);
  }

  [[nodiscard]] const SourceConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::uint64_t page_size() const noexcept { return config_.page_size; }
  [[nodiscard]] static constexpr BackendTag tag() noexcept { return BackendTag::real; }

  Region map_region(std::uint64_t min_bytes) {
    if (min_bytes == 0) throw InvalidArgument("map_region: min_bytes must be > 0");
    const std::uint64_t length = config_.region_length_for(min_bytes);
    if (length == 0) throw SourceExhausted("map_region: size overflow");
    void* p = ::mmap(nullptr, length, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS, -1, 0);
    if (p == MAP_FAILED) throw SourceExhausted("mmap failed");
    const auto base = reinterpret_cast<std::uint64_t>(p);
    live_.emplace(base, length);
    return Region{Address{base}, length, BackendTag::real};
  }

  void unmap_region(const Region& r) {
    auto it = live_.find(r.base.value);
    if (it == live_.end()) throw FatalError("unmap_region: region is not mapped (double unmap?)");
    if (it->second != r.length) throw FatalError("unmap_region: length mismatch");
    ::munmap(reinterpret_cast<void*>(r.base.value), r.length);
    live_.erase(it);
  }

  [[nodiscard]] std::vector<Region> live_regions() const {
    std::vector<Region> out;
    out.reserve(live_.size());
    for (const auto& [base, length] : live_) out.push_back(Region{Address{base}, length, BackendTag::real});
    return out;
  }

  [[nodiscard]] std::size_t live_region_count() const noexcept { return live_.size(); }

  [[nodiscard]] std::uint64_t mapped_bytes() const noexcept {
    std::uint64_t total = 0;
    for (const auto& [base, length] : live_) total += length;
    return total;
  }

  [[nodiscard]] std::uint64_t load_word(Address a) const {
    return detail::load_le64(pointer(a));
  }

  void store_word(Address a, std::uint64_t v) { detail::store_le64(pointer(a), v); }

  void read_bytes(Address a, std::span<std::byte> out) const {
    if (!out.empty()) std::memcpy(out.data(), pointer(a), out.size());
  }

  void write_bytes(Address a, std::span<const std::byte> in) {
    if (!in.empty()) std::memcpy(pointer(a), in.data(), in.size());
  }

  [[nodiscard]] static std::byte* pointer(Address a) noexcept {
    return reinterpret_cast<std::byte*>(a.value);
  }

 private:
  SourceConfig config_;
  std::map<std::uint64_t, std::uint64_t> live_;
};

static_assert(MemorySource<PosixSource>);

}  // namespace randheap
