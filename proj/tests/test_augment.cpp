#include <gtest/gtest.h>

#include <cmath>

#include "presort/augment.hpp"
#include "presort/error.hpp"
#include "test_util.hpp"

using namespace presort;
using presort::testing::random_segment;

namespace {

AugmentConfig only(const std::string& which) {
  AugmentConfig c;
  c.probability = 1.0;
  c.loudness = which == "loudness" ? 0.3 : 0.0;
  c.noise = which == "noise" ? 0.3 : 0.0;
  c.shift = which == "shift" ? 0.3 : 0.0;
  c.pitch_bins = which == "pitch" ? 3 : 0;
  c.mask = which == "mask" ? 5 : 0;
  return c;
}

}  // namespace

TEST(Augment, ZeroProbabilityIsIdentity) {
  const auto seg = random_segment(16, 40, 1);
  AugmentConfig c;
  c.probability = 0.0;
  Rng rng(3);
  EXPECT_EQ(augment(seg, c, rng).values, seg.values);
  c.probability = 1.0;
  c.enabled = false;
  EXPECT_EQ(augment(seg, c, rng).values, seg.values);
}

TEST(Augment, KeepsShapeLabelAndRange) {
  AugmentConfig c;
  c.probability = 0.7;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto seg = random_segment(16, 40, s);
    Rng rng(s);
    const auto out = augment(seg, c, rng);
    EXPECT_EQ(out.values.rows(), seg.values.rows());
    EXPECT_EQ(out.values.cols(), seg.values.cols());
    EXPECT_EQ(out.label, seg.label);
    for (float v : out.values.data()) {
      EXPECT_GE(v, kDbFloor);
      EXPECT_LE(v, 0.0f);
    }
  }
}

TEST(Augment, DeterministicGivenRngState) {
  const auto seg = random_segment(16, 40, 2);
  AugmentConfig c;
  Rng a(9), b(9);
  EXPECT_EQ(augment(seg, c, a).values, augment(seg, c, b).values);
}

TEST(Augment, MasksChangeExactlyTheirRuns) {
  const std::size_t rows = 16, cols = 40;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto seg = random_segment(rows, cols, s);  // no floor cells
    Rng rng(s);
    AugmentTrace tr;
    const auto out = augment(seg, only("mask"), rng, &tr);
    ASSERT_TRUE(tr.freq_mask && tr.time_mask);
    std::size_t changed = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const bool in_f = static_cast<int>(r) >= tr.freq_mask_start && static_cast<int>(r) < tr.freq_mask_start + 5;
        const bool in_t = static_cast<int>(c) >= tr.time_mask_start && static_cast<int>(c) < tr.time_mask_start + 5;
        if (in_f || in_t) {
          EXPECT_EQ(out.values(r, c), kDbFloor);
        } else {
          EXPECT_EQ(out.values(r, c), seg.values(r, c));
        }
        changed += out.values(r, c) != seg.values(r, c);
      }
    }
    EXPECT_EQ(changed, 5 * cols + 5 * rows - 25);
  }
}

TEST(Augment, ShiftMovesFramesAndFillsFloor) {
  const auto seg = random_segment(8, 40, 4);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    AugmentTrace tr;
    const auto out = augment(seg, only("shift"), rng, &tr);
    ASSERT_TRUE(tr.shift);
    EXPECT_LE(std::abs(tr.shift_frames), 12);
    for (std::size_t r = 0; r < 8; ++r) {
      for (int c = 0; c < 40; ++c) {
        const int src = c - tr.shift_frames;
        const float expected = src >= 0 && src < 40 ? seg.values(r, static_cast<std::size_t>(src)) : kDbFloor;
        EXPECT_EQ(out.values(r, static_cast<std::size_t>(c)), expected);
      }
    }
  }
}

TEST(Augment, PitchTranslatesMelBins) {
  const auto seg = random_segment(16, 10, 5);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(s);
    AugmentTrace tr;
    const auto out = augment(seg, only("pitch"), rng, &tr);
    ASSERT_TRUE(tr.pitch);
    EXPECT_LE(std::abs(tr.pitch_shift), 3);
    for (int r = 0; r < 16; ++r) {
      const int src = r - tr.pitch_shift;
      for (std::size_t c = 0; c < 10; ++c) {
        const float expected = src >= 0 && src < 16 ? seg.values(static_cast<std::size_t>(src), c) : kDbFloor;
        EXPECT_EQ(out.values(static_cast<std::size_t>(r), c), expected);
      }
    }
  }
}

TEST(Augment, LoudnessScalesPowerAndLeavesFloor) {
  auto seg = random_segment(8, 20, 6);
  seg.values(0, 0) = kDbFloor;
  Rng rng(1);
  AugmentTrace tr;
  const auto out = augment(seg, only("loudness"), rng, &tr);
  ASSERT_TRUE(tr.loudness);
  EXPECT_GE(tr.gain, 0.7);
  EXPECT_LE(tr.gain, 1.3);
  EXPECT_EQ(out.values(0, 0), kDbFloor);
  for (std::size_t i = 1; i < seg.values.size(); ++i) {
    const double expected = std::min(0.0, seg.values.data()[i] + 10.0 * std::log10(tr.gain));
    EXPECT_NEAR(out.values.data()[i], expected, 1e-4);
  }
}

TEST(Augment, NoiseChangesValuesWithinRange) {
  const auto seg = random_segment(8, 20, 7);
  Rng rng(2);
  AugmentTrace tr;
  const auto out = augment(seg, only("noise"), rng, &tr);
  ASSERT_TRUE(tr.noise);
  EXPECT_NE(out.values, seg.values);
}

TEST(Augment, EachAugmentationFiresWithItsProbability) {
  AugmentConfig c;
  c.probability = 0.5;
  const auto seg = random_segment(16, 40, 8);
  int counts[6] = {};
  const int n = 4000;
  Rng rng(11);
  for (int i = 0; i < n; ++i) {
    AugmentTrace tr;
    augment(seg, c, rng, &tr);
    counts[0] += tr.loudness;
    counts[1] += tr.noise;
    counts[2] += tr.shift;
    counts[3] += tr.pitch;
    counts[4] += tr.freq_mask;
    counts[5] += tr.time_mask;
  }
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(counts[k] / static_cast<double>(n), 0.5, 0.03) << k;
}

TEST(ClassWeights, InverseFrequency) {
  std::vector<std::string> labels;
  for (int i = 0; i < 6; ++i) labels.push_back("background");
  for (int i = 0; i < 3; ++i) labels.push_back("chimpanzee");
  labels.push_back("guenon");
  const auto w = class_weights(labels);
  EXPECT_DOUBLE_EQ(w.at("background"), 10.0 / (3 * 6));
  EXPECT_DOUBLE_EQ(w.at("chimpanzee"), 10.0 / (3 * 3));
  EXPECT_DOUBLE_EQ(w.at("guenon"), 10.0 / 3);

  const std::vector<int> ids{0, 0, 0, 0, 0, 0, 1, 1, 1, 2};
  const auto wi = class_weights(ids, 4);
  EXPECT_DOUBLE_EQ(wi[0], w.at("background"));
  EXPECT_DOUBLE_EQ(wi[2], w.at("guenon"));
  EXPECT_EQ(wi[3], 0.0);
}

TEST(WeightedSampler, BalancesClassesChiSquare) {
  const std::vector<int> per_class{7000, 3000, 1000, 500, 300};
  std::vector<int> labels;
  for (int c = 0; c < 5; ++c) labels.insert(labels.end(), per_class[c], c);
  const auto cw = class_weights(labels, 5);
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = cw[static_cast<std::size_t>(labels[i])];
  Rng rng(2024);
  const std::size_t draws = 100000;
  const auto idx = weighted_sample(w, draws, rng);
  std::vector<double> freq(5, 0.0);
  for (auto i : idx) freq[static_cast<std::size_t>(labels[i])] += 1.0;
  double chi2 = 0.0;
  const double expected = draws / 5.0;
  for (double f : freq) {
    chi2 += (f - expected) * (f - expected) / expected;
    EXPECT_NEAR(f / draws, 0.2, 0.2 * 0.02);
  }
  EXPECT_LT(chi2, 13.2767);  // chi-square quantile, 4 degrees of freedom, alpha = 0.01
}

TEST(WeightedSampler, RejectsInvalidWeights) {
  Rng rng(0);
  EXPECT_THROW(weighted_sample(std::vector<double>{0.0, 0.0}, 3, rng), Error);
  EXPECT_THROW(weighted_sample(std::vector<double>{1.0, -1.0}, 3, rng), Error);
}
