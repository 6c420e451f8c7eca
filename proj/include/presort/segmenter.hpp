#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "presort/matrix.hpp"
#include "presort/spectro.hpp"

namespace presort {

/// Fixed-length window of a clip's mel spectrogram. `label` starts as the clip
/// label and is what relabeling rewrites.
struct MelSegment {
  Matrix<float> values;  // [n_mels x frames_per_segment], dB
  std::string label;
  std::string clip_id;
  int segment_index = 0;
  double start_s = 0.0;
  int padded_frames = 0;

  std::size_t n_mels() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }
  std::size_t valid_frames() const { return values.cols() - static_cast<std::size_t>(padded_frames); }
};

/// ceil(segment_length_s * sample_rate / hop); 88 for 0.7 s at 16 kHz, hop 128.
int frames_per_segment(double segment_length_s, int sample_rate, int hop);

/// Non-overlapping windows left to right. The final partial window is kept and
/// right-padded with floor frames when `pad_last`, dropped otherwise.
std::vector<MelSegment> segment(const MelSpectrogram& spec, const std::string& label,
                                double segment_length_s, bool pad_last = true);

/// Segment store: `<stem>.bin` (magic, version, count, n_mels, frames, then
/// row-major float32 LE matrices) plus `<stem>.csv` index
/// `clip_id,segment_index,label,start_s,padded_frames`.
void write_segment_store(const std::vector<MelSegment>& segments, const std::filesystem::path& stem);
std::vector<MelSegment> read_segment_store(const std::filesystem::path& stem);

}  // namespace presort
