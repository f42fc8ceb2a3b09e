#include <array>

#include <gtest/gtest.h>

#include "randheap/block_header.hpp"
#include "randheap/memory_source.hpp"

namespace randheap {
namespace {

class BlockHeaderTest : public ::testing::Test {
 protected:
  SimulatedSource src;
  Region region = src.map_region(1);
  HeaderCodec<SimulatedSource> codec{src};
  Address base = region.base;
};

TEST_F(BlockHeaderTest, GoldenWireLayout) {
  const BlockRef prev{base + 0x40};
  const BlockRef b = codec.write(base + 0x100, 0x1230, true, prev);
  codec.set_free_prev(b, BlockRef{Address{0x1122334455667788ull}});
  codec.set_free_next(b, BlockRef{Address{0x0102030405060708ull}});

  std::array<std::byte, 32> raw{};
  src.read_bytes(b.at, raw);
  auto word = [&](int i) {
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | std::to_integer<std::uint64_t>(raw[8 * i + k]);
    return v;
  };
  EXPECT_EQ(word(0), 0x1231u);
  EXPECT_EQ(word(1), base.value + 0x40);
  EXPECT_EQ(word(2), 0x1122334455667788ull);
  EXPECT_EQ(word(3), 0x0102030405060708ull);
  EXPECT_EQ(std::to_integer<int>(raw[0]), 0x31);
  EXPECT_EQ(std::to_integer<int>(raw[1]), 0x12);
  EXPECT_EQ(std::to_integer<int>(raw[24]), 0x08);
}

TEST_F(BlockHeaderTest, NoneEncodesAsZero) {
  const BlockRef b = codec.write(base, 64, false, kNoBlock);
  for (std::uint64_t off : {kPrevPhysOffset, kFreePrevOffset, kFreeNextOffset}) EXPECT_EQ(src.load_word(b.at + off), 0u);
}

TEST_F(BlockHeaderTest, WriteReadRoundTrip) {
  const BlockRef b = codec.write(base, 64, false, kNoBlock);
  EXPECT_EQ(codec.decode(b), (BlockHeader{64, false, kNone, kNone, kNone}));
  EXPECT_EQ(codec.capacity(b), 64u);
  EXPECT_FALSE(codec.is_busy(b));
}

TEST_F(BlockHeaderTest, Sentinel) {
  const BlockRef s = codec.write(base, 0, true, kNoBlock);
  EXPECT_TRUE(codec.is_sentinel(s));
  EXPECT_EQ(codec.capacity(s), 0u);
  const BlockRef f = codec.write(base + 64, 0, false, kNoBlock);
  EXPECT_FALSE(codec.is_sentinel(f));
  const BlockRef busy = codec.write(base + 128, 16, true, kNoBlock);
  EXPECT_FALSE(codec.is_sentinel(busy));
}

TEST_F(BlockHeaderTest, RejectsOddCapacityAndMisalignment) {
  EXPECT_THROW(codec.write(base, 65, false, kNoBlock), FatalError);
  EXPECT_THROW(codec.write(base, 8, false, kNoBlock), FatalError);
  EXPECT_THROW(codec.write(base + 8, 64, false, kNoBlock), FatalError);
  EXPECT_THROW(codec.write(kNone, 64, false, kNoBlock), FatalError);
}

TEST_F(BlockHeaderTest, DataAddressAndBlockOf) {
  const BlockRef b = codec.write(base, 64, false, kNoBlock);
  EXPECT_EQ(data_address(b), base + 32);
  EXPECT_EQ(block_of(base + 32), b);
  for (std::uint64_t off = 0; off < 4096; off += kQuantum) {
    const BlockRef x{base + off};
    EXPECT_EQ(data_address(x).value % kQuantum, 0u);
    EXPECT_EQ(block_of(data_address(x)), x);
  }
}

TEST_F(BlockHeaderTest, NextPhysAndBackLink) {
  const BlockRef a = codec.write(base, 64, false, kNoBlock);
  EXPECT_EQ(codec.next_phys(a).at, base + 96);
  const BlockRef b = codec.write(codec.next_phys(a).at, 128, true, a);
  const BlockRef s = codec.write(codec.next_phys(b).at, 0, true, b);
  EXPECT_EQ(codec.prev_phys(codec.next_phys(a)), a);
  EXPECT_EQ(codec.prev_phys(codec.next_phys(b)), b);
  EXPECT_TRUE(codec.is_sentinel(codec.next_phys(b)));
  EXPECT_EQ(s.at, base + 96 + 32 + 128);
}

TEST_F(BlockHeaderTest, BusyFlagPreservesFields) {
  const BlockRef p{base + 0x200};
  const BlockRef b = codec.write(base, 96, false, p);
  codec.set_busy(b);
  EXPECT_TRUE(codec.is_busy(b));
  EXPECT_EQ(codec.capacity(b), 96u);
  EXPECT_EQ(codec.prev_phys(b), p);
  codec.set_free(b);
  EXPECT_FALSE(codec.is_busy(b));
  EXPECT_EQ(codec.capacity(b), 96u);
  EXPECT_EQ(codec.prev_phys(b), p);
  codec.set_busy(b);
  codec.set_capacity(b, 160);
  EXPECT_TRUE(codec.is_busy(b));
  EXPECT_EQ(codec.capacity(b), 160u);
}

TEST_F(BlockHeaderTest, BusyBitNeverPerturbsCapacityExhaustive) {
  for (std::uint64_t cap = 0; cap <= 4096; cap += 16) {
    for (bool busy : {false, true}) {
      const BlockRef b = codec.write(base, cap, busy, kNoBlock);
      ASSERT_EQ(codec.capacity(b), cap);
      ASSERT_EQ(codec.is_busy(b), busy);
      busy ? codec.set_free(b) : codec.set_busy(b);
      ASSERT_EQ(codec.capacity(b), cap);
      ASSERT_EQ(codec.is_busy(b), !busy);
      codec.set_capacity(b, 4096 - cap);
      ASSERT_EQ(codec.is_busy(b), !busy);
    }
  }
}

TEST_F(BlockHeaderTest, GuardMarker) {
  const BlockRef g = codec.write(base, 32, true, kNoBlock);
  EXPECT_FALSE(codec.is_guard(g));
  codec.mark_guard(g);
  EXPECT_TRUE(codec.is_guard(g));
  EXPECT_EQ(codec.capacity(g), 32u);
  const BlockRef f = codec.write(base + 64, 32, false, g);
  codec.set_free_next(f, f);
  EXPECT_FALSE(codec.is_guard(f));
}

}  // namespace
}  // namespace randheap
