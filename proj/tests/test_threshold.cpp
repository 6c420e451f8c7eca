#include <gtest/gtest.h>

#include <cmath>

#include "presort/error.hpp"
#include "presort/threshold.hpp"
#include "test_util.hpp"

using namespace presort;
using presort::testing::random_segment;

namespace {

/// One mel row, one frame per window, with the given linear window energies.
MelSegment energies(std::initializer_list<double> e) {
  MelSegment s;
  s.values = Matrix<float>(1, e.size());
  std::size_t t = 0;
  for (double v : e) s.values(0, t++) = static_cast<float>(10.0 * std::log10(v / 10.0));
  s.label = "chimpanzee";
  return s;
}

std::vector<bool> blackened_frames(const ThresholdResult& r, int width) {
  std::vector<bool> out(r.segment.n_frames());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = !r.single_window && r.blackened[t / width];
  return out;
}

}  // namespace

TEST(Threshold, HandExampleBlackensMiddleWindow) {
  const auto r = apply_threshold(energies({10, 2, 9}), 1, 0.3);
  ASSERT_EQ(r.blackened.size(), 3u);
  EXPECT_FALSE(r.blackened[0]);
  EXPECT_TRUE(r.blackened[1]);
  EXPECT_FALSE(r.blackened[2]);
  EXPECT_NEAR(r.normalized_sums[1], 0.2, 1e-6);
  EXPECT_EQ(r.segment.values(0, 1), kDbFloor);
  EXPECT_EQ(r.segment.values(0, 0), energies({10, 2, 9}).values(0, 0));
}

TEST(Threshold, WindowLengthInFrames) {
  EXPECT_EQ(threshold_window_frames(0.4, 16000, 128), 50);
  EXPECT_EQ(threshold_window_frames(0.7, 16000, 128), 88);
}

TEST(Threshold, SingleWindowIsUnchanged) {
  const auto seg = random_segment(8, 40, 1);
  const auto r = apply_threshold(seg, 40, 0.9);
  EXPECT_TRUE(r.single_window);
  EXPECT_EQ(r.segment.values, seg.values);
}

TEST(Threshold, AllFloorSegmentStaysFloor) {
  MelSegment s;
  s.values = Matrix<float>(4, 20, kDbFloor);
  const auto r = apply_threshold(s, 5, 0.3);
  for (double v : r.normalized_sums) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.segment.values, s.values);
}

TEST(Threshold, MonotoneInThreshold) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto seg = random_segment(6, 88, seed);
    std::vector<bool> prev(88, false);
    for (double th : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
      const auto cur = blackened_frames(apply_threshold(seg, 10, th), 10);
      for (std::size_t t = 0; t < cur.size(); ++t) EXPECT_TRUE(!prev[t] || cur[t]) << seed << " " << th;
      prev = cur;
    }
  }
}

TEST(Threshold, Idempotent) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto seg = random_segment(6, 88, seed);
    for (double th : {0.2, 0.5, 0.95}) {
      const auto once = apply_threshold(seg, 11, th);
      const auto twice = apply_threshold(once.segment, 11, th);
      EXPECT_EQ(twice.segment.values, once.segment.values);
      EXPECT_EQ(twice.blackened, once.blackened);
    }
  }
}

TEST(Threshold, LoudestWindowSurvivesAndShapeIsKept) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto seg = random_segment(5, 88, seed);
    const auto r = apply_threshold(seg, 50, 1.0);
    EXPECT_EQ(r.segment.n_frames(), 88u);
    EXPECT_EQ(r.segment.label, seg.label);
    int survivors = 0;
    for (bool b : r.blackened) survivors += b ? 0 : 1;
    EXPECT_GE(survivors, 1);
  }
}

TEST(Threshold, BlackenedFractionCountsFrames) {
  const auto r = apply_threshold(energies({10, 2, 9, 1, 10}), 2, 0.3);
  // windows {10,2} {9,1} {10}: sums 12, 10, 10 -> nothing below 0.3
  EXPECT_DOUBLE_EQ(r.blackened_fraction(), 0.0);
  const auto r2 = apply_threshold(energies({10, 2, 9}), 1, 0.3);
  EXPECT_NEAR(r2.blackened_fraction(), 1.0 / 3.0, 1e-12);
}

TEST(Threshold, RejectsBadArguments) {
  const auto seg = random_segment(2, 10, 0);
  EXPECT_THROW(apply_threshold(seg, 0, 0.3), Error);
  EXPECT_THROW(apply_threshold(seg, 2, 1.5), Error);
}

TEST(Threshold, SweepAveragesPerLabel) {
  std::vector<MelSegment> segs{energies({10, 2, 9}), energies({10, 10, 10})};
  segs[1].label = "background";
  const auto rows = sweep_report(segs, {1.0 * 128 / 16000}, {0.3}, 16000, 128);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.segments, 1u);
    EXPECT_NEAR(r.mean_blackened_fraction, r.label == "background" ? 0.0 : 1.0 / 3.0, 1e-12);
  }
}
