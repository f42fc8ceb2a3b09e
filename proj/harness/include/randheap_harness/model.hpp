#pragma once

#include <algorithm>
#include <cstdint>
#include <list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace randheap::harness {

/// Where an allocation landed: which region (numbered in mapping order),
/// data offset from the region base, and the capacity it received.
struct Placement {
  std::uint64_t region_serial = 0;
  std::uint64_t offset = 0;
  std::uint64_t capacity = 0;
  friend bool operator==(const Placement&, const Placement&) = default;
};

/// One block in the model, for whole-layout comparison.
struct ModelBlock {
  std::uint64_t region_serial = 0;
  std::uint64_t header_offset = 0;
  std::uint64_t capacity = 0;
  bool busy = false;
  friend bool operator==(const ModelBlock&, const ModelBlock&) = default;
  friend auto operator<=>(const ModelBlock&, const ModelBlock&) = default;
};

/// Brute-force reference allocator over flat extent lists.
///
/// Same constants and policies as the real allocator with randomization
/// off: 32-byte headers, 16-byte quantum, split only when the rest keeps a
/// header plus 16 bytes, first fit in recency order (newest free block
/// first), full coalescing, a region is returned once one free block
/// covers it. Alignment is computed on region offsets, so it is exact only
/// for alignments up to the page size (region bases are page aligned).
class ModelAllocator {
 public:
  static constexpr std::uint64_t kHdr = 32;
  static constexpr std::uint64_t kQ = 16;
  static constexpr std::uint64_t kSplitMin = kHdr + kQ;

  ModelAllocator(std::uint64_t page_size, std::uint64_t min_region)
      : page_(page_size), min_region_(min_region) {}

  Placement allocate(std::uint64_t size, std::uint64_t align = 0) {
    const std::uint64_t need = (size + kQ - 1) / kQ * kQ;
    const bool aligned = align > kQ;

    // Search the recency list.
    for (auto it = order_.begin(); it != order_.end(); ++it) {
      Extent& e = extent(*it);
      if (!aligned) {
        if (e.cap >= need) {
          const Ref ref = *it;
          order_.erase(it);
          return finish(ref, need);
        }
      } else if (auto s = shift_for(e, need, align); s >= 0) {
        const Ref ref = *it;
        order_.erase(it);
        return finish_aligned(ref, need, static_cast<std::uint64_t>(s));
      }
    }

    // Nothing fits: new region.
    const std::uint64_t want = aligned ? need + kSplitMin + align : need;
    const Ref ref = map_region(want);
    if (!aligned) {
      order_.remove(ref);
      return finish(ref, need);
    }
    const auto s = shift_for(extent(ref), need, align);
    if (s < 0) throw std::logic_error("model: fresh region cannot satisfy alignment");
    order_.remove(ref);
    return finish_aligned(ref, need, static_cast<std::uint64_t>(s));
  }

  void deallocate(std::uint64_t region_serial, std::uint64_t data_offset) {
    auto reg = find_region(region_serial);
    auto& blocks = reg->blocks;
    auto idx = index_of(blocks, data_offset - kHdr);
    blocks[idx].busy = false;
    bool listed = false;

    if (idx > 0 && !blocks[idx - 1].busy) {
      blocks[idx - 1].cap += kHdr + blocks[idx].cap;
      blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(idx));
      --idx;
      listed = true;
    }
    if (idx + 1 < blocks.size() && !blocks[idx + 1].busy) {
      order_.remove(Ref{region_serial, blocks[idx + 1].offset});
      blocks[idx].cap += kHdr + blocks[idx + 1].cap;
      blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(idx + 1));
    }

    const Ref ref{region_serial, blocks[idx].offset};
    if (blocks.size() == 1) {
      if (listed) order_.remove(ref);
      regions_.erase(reg);
    } else if (!listed) {
      order_.push_front(ref);
    }
  }

  [[nodiscard]] std::size_t live_regions() const noexcept { return regions_.size(); }

  /// Every block of every live region, sentinels excluded, in (serial, offset) order.
  [[nodiscard]] std::vector<ModelBlock> layout() const {
    std::vector<ModelBlock> out;
    for (const auto& r : regions_)
      for (const auto& e : r.blocks) out.push_back({r.serial, e.offset, e.cap, e.busy});
    return out;
  }

  /// Region lengths in mapping order.
  [[nodiscard]] std::vector<std::uint64_t> region_lengths() const {
    std::vector<std::uint64_t> out;
    for (const auto& r : regions_) out.push_back(r.length);
    return out;
  }

 private:
  struct Extent {
    std::uint64_t offset;  // header offset within region
    std::uint64_t cap;
    bool busy;
  };
  struct ModelRegion {
    std::uint64_t serial;
    std::uint64_t length;
    std::vector<Extent> blocks;  // physical order, sentinel implicit
  };
  struct Ref {
    std::uint64_t serial;
    std::uint64_t offset;
    friend bool operator==(const Ref&, const Ref&) = default;
  };

  static long long shift_for(const Extent& e, std::uint64_t need, std::uint64_t align) {
    const std::uint64_t data = e.offset + kHdr;
    std::uint64_t s = (align - data % align) % align;
    if (s != 0)
      while (s < kSplitMin) s += align;
    if (e.cap >= s + need) return static_cast<long long>(s);
    return -1;
  }

  Ref map_region(std::uint64_t need) {
    std::uint64_t length = (3 * kHdr + need + page_ - 1) / page_ * page_;
    length = std::max(length, min_region_);
    regions_.push_back({next_serial_, length, {{0, length - 2 * kHdr, false}}});
    const Ref ref{next_serial_++, 0};
    order_.push_front(ref);
    return ref;
  }

  Placement finish_aligned(Ref ref, std::uint64_t need, std::uint64_t shift) {
    if (shift == 0) return finish(ref, need);
    auto& blocks = find_region(ref.serial)->blocks;
    const auto idx = index_of(blocks, ref.offset);
    const std::uint64_t cap = blocks[idx].cap;
    blocks[idx].cap = shift - kHdr;
    blocks.insert(blocks.begin() + static_cast<std::ptrdiff_t>(idx + 1), Extent{ref.offset + shift, cap - shift, false});
    order_.push_front(ref);
    return finish(Ref{ref.serial, ref.offset + shift}, need);
  }

  // `ref` is free and not in the recency list.
  Placement finish(Ref ref, std::uint64_t need) {
    auto& blocks = find_region(ref.serial)->blocks;
    const auto idx = index_of(blocks, ref.offset);
    Extent& e = blocks[idx];
    if (e.cap - need >= kSplitMin) {
      const Extent rest{e.offset + kHdr + need, e.cap - need - kHdr, false};
      e.cap = need;
      blocks.insert(blocks.begin() + static_cast<std::ptrdiff_t>(idx + 1), rest);
      order_.push_front(Ref{ref.serial, rest.offset});
    }
    blocks[idx].busy = true;
    return Placement{ref.serial, ref.offset + kHdr, blocks[idx].cap};
  }

  Extent& extent(Ref ref) {
    auto& blocks = find_region(ref.serial)->blocks;
    return blocks[index_of(blocks, ref.offset)];
  }

  std::vector<ModelRegion>::iterator find_region(std::uint64_t serial) {
    auto it = std::find_if(regions_.begin(), regions_.end(), [&](const ModelRegion& r) { return r.serial == serial; });
    if (it == regions_.end()) throw std::logic_error("model: unknown region");
    return it;
  }

  static std::size_t index_of(const std::vector<Extent>& blocks, std::uint64_t header_offset) {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i].offset == header_offset) return i;
    throw std::logic_error("model: no block at offset");
  }

  std::uint64_t page_;
  std::uint64_t min_region_;
  std::uint64_t next_serial_ = 0;
  std::vector<ModelRegion> regions_;
  std::list<Ref> order_;
};

}  // namespace randheap::harness
