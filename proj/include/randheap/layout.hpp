#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace randheap {

/// Smallest granularity of capacities, shifts and data alignment.
inline constexpr std::uint64_t kQuantum = 16;

/// Size of the per-block control header: four little-endian 64-bit words.
inline constexpr std::uint64_t kHeaderSize = 32;

/// Smallest leftover that can be split off as its own block.
inline constexpr std::uint64_t kMinSplit = kHeaderSize + kQuantum;

static_assert(std::has_single_bit(kQuantum) && kQuantum >= 2);
static_assert(kHeaderSize % kQuantum == 0);

// Word offsets inside a header.
inline constexpr std::uint64_t kSizeWordOffset = 0;
inline constexpr std::uint64_t kPrevPhysOffset = 8;
inline constexpr std::uint64_t kFreePrevOffset = 16;
inline constexpr std::uint64_t kFreeNextOffset = 24;

inline constexpr std::uint64_t kBusyBit = 1;

/// Numeric address in whatever space the memory backend exposes.
/// Zero is reserved and encodes "none".
struct Address {
  std::uint64_t value = 0;

  constexpr Address() = default;
  constexpr explicit Address(std::uint64_t v) : value(v) {}

  [[nodiscard]] constexpr bool is_none() const noexcept { return value == 0; }
  [[nodiscard]] constexpr explicit operator bool() const noexcept { return value != 0; }

  constexpr Address operator+(std::uint64_t off) const noexcept { return Address{value + off}; }
  constexpr Address operator-(std::uint64_t off) const noexcept { return Address{value - off}; }
  constexpr std::uint64_t operator-(Address other) const noexcept { return value - other.value; }

  friend constexpr auto operator<=>(Address, Address) = default;
};

inline constexpr Address kNone{};

/// Reference to a block header. Thin wrapper so header and data addresses
/// cannot be mixed up silently.
struct BlockRef {
  Address at;

  [[nodiscard]] constexpr bool is_none() const noexcept { return at.is_none(); }
  [[nodiscard]] constexpr explicit operator bool() const noexcept { return !at.is_none(); }

  friend constexpr auto operator<=>(BlockRef, BlockRef) = default;
};

inline constexpr BlockRef kNoBlock{};

[[nodiscard]] constexpr bool is_power_of_two(std::uint64_t v) noexcept {
  return std::has_single_bit(v);
}

/// Rounds up to a multiple of a power of two. Returns 0 on overflow.
[[nodiscard]] constexpr std::uint64_t round_up(std::uint64_t v, std::uint64_t pow2) noexcept {
  const std::uint64_t mask = pow2 - 1;
  if (v > UINT64_MAX - mask) return 0;
  return (v + mask) & ~mask;
}

// Errors.

/// Broken allocator or caller contract that the library can detect.
class FatalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutOfMemory : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The backend cannot supply another region.
class SourceExhausted : public OutOfMemory {
 public:
  using OutOfMemory::OutOfMemory;
};

/// Read or write outside any live simulated region.
class AccessViolation : public std::runtime_error {
 public:
  explicit AccessViolation(Address a)
      : std::runtime_error("access violation at 0x" + to_hex(a.value)), address(a) {}

  Address address;

 private:
  static std::string to_hex(std::uint64_t v) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    do {
      s.insert(s.begin(), kDigits[v & 0xF]);
      v >>= 4;
    } while (v != 0);
    return s;
  }
};

namespace detail {

inline void store_le64(std::byte* dst, std::uint64_t v) noexcept {
  for (int i = 0; i < 8; ++i) {
    dst[i] = static_cast<std::byte>(v & 0xFF);
    v >>= 8;
  }
}

[[nodiscard]] inline std::uint64_t load_le64(const std::byte* src) noexcept {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint64_t>(src[i]);
  return v;
}

}  // namespace detail

}  // namespace randheap
