#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "randheap/layout.hpp"

namespace randheap {

enum class BackendTag { real, simulated };

/// One contiguous mapping handed out by a memory source.
struct Region {
  Address base;
  std::uint64_t length = 0;
  BackendTag backend_tag = BackendTag::simulated;

  [[nodiscard]] Address end() const noexcept { return base + length; }
  [[nodiscard]] bool contains(Address a, std::uint64_t n = 1) const noexcept {
    return a >= base && n <= length && a.value - base.value <= length - n;
  }

  friend bool operator==(const Region&, const Region&) = default;
};

struct SourceConfig {
  std::uint64_t page_size = 4096;
  std::uint64_t min_region = 65536;
  bool poison_on_unmap = false;
  /// Upper bound on simultaneously mapped bytes (simulated backend only).
  std::uint64_t arena_capacity = std::uint64_t{256} << 20;

  void validate() const {
    if (!is_power_of_two(page_size) || !is_power_of_two(min_region))
      throw InvalidArgument("page_size and min_region must be powers of two");
    if (min_region < page_size) throw InvalidArgument("min_region must be >= page_size");
    if (page_size < kQuantum) throw InvalidArgument("page_size must be >= quantum");
  }

  /// Length that map_region hands out for a request of `min_bytes`, or 0 on overflow.
  [[nodiscard]] std::uint64_t region_length_for(std::uint64_t min_bytes) const noexcept {
    const std::uint64_t pages = round_up(min_bytes, page_size);
    if (pages == 0) return 0;
    return std::max(pages, min_region);
  }
};

/// What the allocator needs from a backend: page mapping plus word access
/// to the mapped bytes.
template <typename S>
concept MemorySource = requires(S s, const S cs, Address a, std::uint64_t n, Region r) {
  { s.map_region(n) } -> std::same_as<Region>;
  { s.unmap_region(r) } -> std::same_as<void>;
  { cs.page_size() } -> std::same_as<std::uint64_t>;
  { cs.live_regions() } -> std::same_as<std::vector<Region>>;
  { cs.load_word(a) } -> std::same_as<std::uint64_t>;
  { s.store_word(a, n) } -> std::same_as<void>;
};

/// Deterministic page mapper over an in-process arena.
///
/// Addresses are virtual: they are numbers in a private address space, not
/// host pointers. Every access is bounds-checked against the live set, so
/// touching an unmapped region raises AccessViolation. Bases are assigned
/// by a bump cursor with a one-page hole between regions and are never
/// reused.
class SimulatedSource {
 public:
  static constexpr std::uint64_t kOrigin = 0x1000'0000;
  static constexpr std::byte kFreshFill{0xAA};
  static constexpr std::byte kPoisonFill{0xDD};

  explicit SimulatedSource(SourceConfig config = {}) : config_(config), next_base_(kOrigin) {
    config_.validate();
  }

  SimulatedSource(SimulatedSource&&) noexcept = default;
  SimulatedSource& operator=(SimulatedSource&&) noexcept = default;
  SimulatedSource(const SimulatedSource&) = delete;
  SimulatedSource& operator=(const SimulatedSource&) = delete;

  [[nodiscard]] const SourceConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::uint64_t page_size() const noexcept { return config_.page_size; }
  [[nodiscard]] static constexpr BackendTag tag() noexcept { return BackendTag::simulated; }

  Region map_region(std::uint64_t min_bytes) {
    if (min_bytes == 0) throw InvalidArgument("map_region: min_bytes must be > 0");
    const std::uint64_t length = config_.region_length_for(min_bytes);
    if (length == 0 || length > config_.arena_capacity - live_bytes_)
      throw SourceExhausted("simulated arena exhausted");
    if (next_base_ > UINT64_MAX - length - config_.page_size)
      throw SourceExhausted("simulated address space exhausted");

    const std::uint64_t base = next_base_;
    live_.emplace(base, std::vector<std::byte>(length, kFreshFill));
    next_base_ = base + length + config_.page_size;
    live_bytes_ += length;
    return Region{Address{base}, length, BackendTag::simulated};
  }

  void unmap_region(const Region& r) {
    auto it = live_.find(r.base.value);
    if (it == live_.end()) throw FatalError("unmap_region: region is not mapped (double unmap?)");
    if (it->second.size() != r.length) throw FatalError("unmap_region: length mismatch");
    if (cache_base_ == r.base.value) cache_bytes_ = nullptr;
    live_bytes_ -= r.length;
    auto node = live_.extract(it);
    if (config_.poison_on_unmap) {
      std::fill(node.mapped().begin(), node.mapped().end(), kPoisonFill);
      retired_.insert(std::move(node));
    }
  }

  /// All currently mapped regions in base order.
  [[nodiscard]] std::vector<Region> live_regions() const {
    std::vector<Region> out;
    out.reserve(live_.size());
    for (const auto& [base, bytes] : live_)
      out.push_back(Region{Address{base}, bytes.size(), BackendTag::simulated});
    return out;
  }

  [[nodiscard]] std::size_t live_region_count() const noexcept { return live_.size(); }
  [[nodiscard]] std::uint64_t mapped_bytes() const noexcept { return live_bytes_; }

  /// Live region containing `a`, if any.
  [[nodiscard]] std::optional<Region> region_of(Address a) const {
    auto it = live_.upper_bound(a.value);
    if (it == live_.begin()) return std::nullopt;
    --it;
    Region r{Address{it->first}, it->second.size(), BackendTag::simulated};
    if (!r.contains(a)) return std::nullopt;
    return r;
  }

  [[nodiscard]] std::uint64_t load_word(Address a) const {
    return detail::load_le64(locate(a, 8));
  }

  void store_word(Address a, std::uint64_t v) { detail::store_le64(locate(a, 8), v); }

  void read_bytes(Address a, std::span<std::byte> out) const {
    if (out.empty()) return;
    std::memcpy(out.data(), locate(a, out.size()), out.size());
  }

  void write_bytes(Address a, std::span<const std::byte> in) {
    if (in.empty()) return;
    std::memcpy(locate(a, in.size()), in.data(), in.size());
  }

  /// Raw byte of an unmapped, poisoned region. Diagnostics only.
  [[nodiscard]] std::optional<std::byte> retired_byte(Address a) const {
    auto it = retired_.upper_bound(a.value);
    if (it == retired_.begin()) return std::nullopt;
    --it;
    const std::uint64_t off = a.value - it->first;
    if (off >= it->second.size()) return std::nullopt;
    return it->second[off];
  }

 private:
  std::byte* locate(Address a, std::uint64_t n) const {
    if (cache_bytes_ != nullptr && a.value >= cache_base_ &&
        a.value - cache_base_ <= cache_bytes_->size() &&
        n <= cache_bytes_->size() - (a.value - cache_base_))
      return cache_bytes_->data() + (a.value - cache_base_);

    auto it = live_.upper_bound(a.value);
    if (it == live_.begin()) throw AccessViolation(a);
    --it;
    auto& bytes = const_cast<std::vector<std::byte>&>(it->second);
    const std::uint64_t off = a.value - it->first;
    if (off > bytes.size() || n > bytes.size() - off) throw AccessViolation(a);
    cache_base_ = it->first;
    cache_bytes_ = &bytes;
    return bytes.data() + off;
  }

  SourceConfig config_;
  std::uint64_t next_base_;
  std::uint64_t live_bytes_ = 0;
  std::map<std::uint64_t, std::vector<std::byte>> live_;
  std::map<std::uint64_t, std::vector<std::byte>> retired_;
  mutable std::uint64_t cache_base_ = 0;
  mutable std::vector<std::byte>* cache_bytes_ = nullptr;
};

static_assert(MemorySource<SimulatedSource>);

}  // namespace randheap
