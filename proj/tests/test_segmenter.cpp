#include <gtest/gtest.h>

#include "presort/error.hpp"
#include "presort/segmenter.hpp"
#include "test_util.hpp"

using namespace presort;
using presort::testing::TempDir;

namespace {

MelSpectrogram ramp_spec(std::size_t rows, std::size_t frames) {
  MelSpectrogram s;
  s.values = Matrix<float>(rows, frames);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < frames; ++t) s.values(r, t) = -static_cast<float>((r * 7 + t) % 80);
  }
  s.n_mels = static_cast<int>(rows);
  s.hop = 128;
  s.n_fft = 1024;
  s.sample_rate = 16000;
  s.clip_id = "clip";
  return s;
}

std::size_t frames_for(double seconds) { return frame_count(static_cast<std::size_t>(std::llround(seconds * 16000)), 128); }

}  // namespace

TEST(Segmenter, FramesPerSegment) {
  EXPECT_EQ(frames_per_segment(0.7, 16000, 128), 88);
  EXPECT_EQ(frames_per_segment(0.4, 16000, 128), 50);
  EXPECT_EQ(frames_per_segment(1.0, 16000, 128), 125);
  EXPECT_THROW(frames_per_segment(0.0, 16000, 128), Error);
}

TEST(Segmenter, ThreeSecondsGivesFiveSegments) {
  const auto segs = segment(ramp_spec(4, frames_for(3.0)), "chimpanzee", 0.7);
  ASSERT_EQ(segs.size(), 5u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(segs[i].padded_frames, 0);
  EXPECT_EQ(segs[4].padded_frames, 88 * 5 - 375);
  EXPECT_NEAR(segs[4].start_s, 4 * 88 * 128 / 16000.0, 1e-12);
  for (const auto& s : segs) {
    EXPECT_EQ(s.label, "chimpanzee");
    EXPECT_EQ(s.n_frames(), 88u);
  }
}

TEST(Segmenter, ExactFitHasNoPadding) {
  const auto segs = segment(ramp_spec(4, 88), "guenon", 0.7);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].padded_frames, 0);
}

TEST(Segmenter, ShortestClipIsMostlyPadding) {
  const std::size_t frames = frames_for(0.145);
  EXPECT_EQ(frames, 19u);
  const auto segs = segment(ramp_spec(4, frames), "redcap", 0.7);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].padded_frames, 69);
  for (std::size_t t = 19; t < 88; ++t) EXPECT_EQ(segs[0].values(2, t), kDbFloor);
}

TEST(Segmenter, DropLastWhenNotPadding) {
  const auto segs = segment(ramp_spec(4, frames_for(3.0)), "chimpanzee", 0.7, false);
  EXPECT_EQ(segs.size(), 4u);
  EXPECT_TRUE(segment(ramp_spec(4, 19), "redcap", 0.7, false).empty());
}

TEST(Segmenter, SegmentsReassembleTheSpectrogram) {
  for (std::size_t frames : {1u, 87u, 88u, 89u, 300u, 375u}) {
    const auto spec = ramp_spec(6, frames);
    const auto segs = segment(spec, "mandrill", 0.7);
    Matrix<float> back(6, frames);
    std::size_t t0 = 0;
    for (const auto& s : segs) {
      EXPECT_EQ(static_cast<std::size_t>(s.segment_index) * 88, t0);
      for (std::size_t t = 0; t < s.valid_frames(); ++t) {
        for (std::size_t r = 0; r < 6; ++r) back(r, t0 + t) = s.values(r, t);
      }
      t0 += s.valid_frames();
    }
    EXPECT_EQ(t0, frames);
    EXPECT_EQ(back, spec.values);
  }
}

TEST(SegmentStore, RoundTrip) {
  TempDir dir;
  auto segs = segment(ramp_spec(8, 200), "chimpanzee", 0.7);
  segs[1].label = "background";
  write_segment_store(segs, dir / "train");
  const auto back = read_segment_store(dir / "train");
  ASSERT_EQ(back.size(), segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    EXPECT_EQ(back[i].values, segs[i].values);
    EXPECT_EQ(back[i].label, segs[i].label);
    EXPECT_EQ(back[i].clip_id, segs[i].clip_id);
    EXPECT_EQ(back[i].segment_index, segs[i].segment_index);
    EXPECT_EQ(back[i].padded_frames, segs[i].padded_frames);
    EXPECT_NEAR(back[i].start_s, segs[i].start_s, 1e-9);
  }
}

TEST(SegmentStore, EmptyStoreRoundTrips) {
  TempDir dir;
  write_segment_store({}, dir / "empty");
  EXPECT_TRUE(read_segment_store(dir / "empty").empty());
}
