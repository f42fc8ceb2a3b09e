#include <gtest/gtest.h>

#include "randheap_harness/model.hpp"

namespace randheap::harness {
namespace {

TEST(ModelAllocator, FirstAllocation) {
  ModelAllocator m(4096, 65536);
  EXPECT_EQ(m.allocate(100), (Placement{0, 32, 112}));
  EXPECT_EQ(m.region_lengths(), std::vector<std::uint64_t>{65536});
}

TEST(ModelAllocator, AdjacentAllocations) {
  ModelAllocator m(4096, 65536);
  const auto a = m.allocate(100);
  const auto b = m.allocate(40);
  EXPECT_EQ(b.offset, a.offset + a.capacity + 32);
  EXPECT_EQ(b.capacity, 48u);
}

TEST(ModelAllocator, LeftConsume) {
  ModelAllocator m(4096, 65536);
  const auto a = m.allocate(64);
  const auto b = m.allocate(96);
  m.allocate(32);
  m.deallocate(0, a.offset);
  m.deallocate(0, b.offset);
  const auto layout = m.layout();
  ASSERT_GE(layout.size(), 2u);
  EXPECT_EQ(layout[0], (ModelBlock{0, 0, 64 + 32 + 96, false}));
}

TEST(ModelAllocator, RegionReleasedWhenEmpty) {
  ModelAllocator m(4096, 65536);
  const auto a = m.allocate(64);
  const auto b = m.allocate(64);
  const auto c = m.allocate(65280);
  EXPECT_EQ(c.capacity, 65280u);
  m.deallocate(0, b.offset);
  m.deallocate(0, c.offset);
  EXPECT_EQ(m.live_regions(), 1u);
  m.deallocate(0, a.offset);
  EXPECT_EQ(m.live_regions(), 0u);
  // Next region gets a new serial.
  EXPECT_EQ(m.allocate(10).region_serial, 1u);
}

TEST(ModelAllocator, RecencyOrderFirstFit) {
  ModelAllocator m(4096, 65536);
  const auto a = m.allocate(256);
  m.allocate(16);
  const auto c = m.allocate(512);
  m.allocate(16);
  m.deallocate(0, a.offset);  // recency: [a, tail]
  m.deallocate(0, c.offset);  // recency: [c, a, tail]
  // 200 fits both a (256) and c (512); c is newer.
  EXPECT_EQ(m.allocate(200).offset, c.offset);
}

TEST(ModelAllocator, AlignedShift) {
  ModelAllocator m(4096, 65536);
  EXPECT_EQ(m.allocate(64, 64), (Placement{0, 128, 64}));
  const auto layout = m.layout();
  EXPECT_EQ(layout[0], (ModelBlock{0, 0, 64, false}));
  EXPECT_EQ(layout[1], (ModelBlock{0, 96, 64, true}));
}

TEST(ModelAllocator, LargeRequestGetsLargerRegion) {
  ModelAllocator m(4096, 65536);
  const auto p = m.allocate(70000);
  EXPECT_EQ(p.capacity, 70000u);
  EXPECT_EQ(m.region_lengths(), std::vector<std::uint64_t>{73728});
}

}  // namespace
}  // namespace randheap::harness
