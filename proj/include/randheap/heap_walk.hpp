#pragma once

#include <cstdint>
#include <string>

#include "randheap/block_header.hpp"
#include "randheap/memory_source.hpp"

namespace randheap {

/// Visits every header of `region` in physical order, sentinel included.
/// Checks bounds and back-links as it goes and throws FatalError when the
/// chain does not close exactly at the region end.
template <WordMemory M, typename Visit>
void walk_region(const HeaderCodec<M>& codec, const Region& region, Visit&& visit) {
  const Address last = region.end() - kHeaderSize;
  BlockRef prev = kNoBlock;
  BlockRef b{region.base};
  for (;;) {
    if (b.at > last || b.at.value % kQuantum != 0)
      throw FatalError("corrupt chain: header outside region at offset " + std::to_string(b.at - region.base));
    if (codec.prev_phys(b) != prev)
      throw FatalError("corrupt chain: bad back-link at offset " + std::to_string(b.at - region.base));
    if (codec.is_sentinel(b)) {
      if (b.at != last)
        throw FatalError("corrupt chain: sentinel before region end at offset " +
                         std::to_string(b.at - region.base));
      visit(b);
      return;
    }
    const std::uint64_t cap = codec.capacity(b);
    if (cap > last - data_address(b))
      throw FatalError("corrupt chain: block overruns region at offset " + std::to_string(b.at - region.base));
    visit(b);
    prev = b;
    b = codec.next_phys(b);
  }
}

}  // namespace randheap
