#pragma once

#include <string>
#include <vector>

#include "presort/segmenter.hpp"

namespace presort {

struct ThresholdResult {
  MelSegment segment;
  std::vector<double> normalized_sums;  // per window, relative to the loudest window
  std::vector<bool> blackened;          // per window
  bool single_window = false;           // window covers the whole segment; returned unchanged

  double blackened_fraction() const;    // fraction of frames inside blackened windows
};

/// Local adaptive thresholding. The segment is cut into non-overlapping windows
/// of `window_frames`; each window's energy is the sum of linear mel power over
/// its cells (floor cells count as zero). Sums are normalized by the largest
/// window sum and windows below `threshold` are set to the floor.
ThresholdResult apply_threshold(const MelSegment& seg, int window_frames, double threshold);

/// Window length in frames for a window of `window_s` seconds.
int threshold_window_frames(double window_s, int sample_rate, int hop);

struct SweepRow {
  double window_s = 0.0;
  double threshold = 0.0;
  std::string label;
  std::size_t segments = 0;
  double mean_blackened_fraction = 0.0;
};

/// Mean blackened fraction per (window, threshold, label).
std::vector<SweepRow> sweep_report(const std::vector<MelSegment>& segments,
                                   const std::vector<double>& windows_s,
                                   const std::vector<double>& thresholds, int sample_rate, int hop);

}  // namespace presort
