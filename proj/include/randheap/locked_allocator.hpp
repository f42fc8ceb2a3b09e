#pragma once

#include <mutex>

#include "randheap/allocator.hpp"

namespace randheap {

/// Serializes every call on one Allocator behind a single mutex.
template <MemorySource Source>
class LockedAllocator {
 public:
  explicit LockedAllocator(AllocConfig config = {}, Source source = Source{})
      : inner_(config, std::move(source)) {}

  Address allocate(std::uint64_t n) {
    std::scoped_lock lock(mu_);
    return inner_.allocate(n);
  }

  Address allocate_aligned(std::uint64_t n, std::uint64_t align) {
    std::scoped_lock lock(mu_);
    return inner_.allocate_aligned(n, align);
  }

  void deallocate(Address data) {
    std::scoped_lock lock(mu_);
    inner_.deallocate(data);
  }

  /// Runs `fn(Allocator&)` with the lock held.
  template <typename Fn>
  decltype(auto) with_locked(Fn&& fn) {
    std::scoped_lock lock(mu_);
    return std::forward<Fn>(fn)(inner_);
  }

 private:
  std::mutex mu_;
  Allocator<Source> inner_;
};

}  // namespace randheap
