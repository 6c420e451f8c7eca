#include "presort/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "presort/error.hpp"

namespace presort {

double ThresholdResult::blackened_fraction() const {
  const std::size_t frames = segment.n_frames();
  if (frames == 0 || blackened.empty()) return 0.0;
  const std::size_t window = (frames + blackened.size() - 1) / blackened.size();
  std::size_t count = 0;
  for (std::size_t w = 0; w < blackened.size(); ++w) {
    if (blackened[w]) count += std::min(window, frames - w * window);
  }
  return static_cast<double>(count) / static_cast<double>(frames);
}

int threshold_window_frames(double window_s, int sample_rate, int hop) {
  if (!(window_s > 0.0)) throw Error("threshold window must be > 0 s");
  return std::max(1, static_cast<int>(std::lround(window_s * sample_rate / hop)));
}

ThresholdResult apply_threshold(const MelSegment& seg, int window_frames, double threshold) {
  if (window_frames <= 0) throw Error("threshold window must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("threshold must lie in [0, 1]");

  ThresholdResult result{seg, {}, {}, false};
  const std::size_t frames = seg.n_frames();
  const auto width = static_cast<std::size_t>(window_frames);
  if (width >= frames) {
    result.single_window = true;
    result.normalized_sums = {1.0};
    result.blackened = {false};
    return result;
  }

  const std::size_t windows = (frames + width - 1) / width;
  std::vector<double> sums(windows, 0.0);
  for (std::size_t r = 0; r < seg.n_mels(); ++r) {
    auto row = seg.values.row(r);
    for (std::size_t t = 0; t < frames; ++t) {
      if (row[t] > kDbFloor) sums[t / width] += std::pow(10.0, row[t] / 10.0);
    }
  }
  double peak = *std::max_element(sums.begin(), sums.end());
  if (peak <= 0.0) peak = 1.0;  // all windows at the floor: nothing to normalize against

  result.normalized_sums.resize(windows);
  result.blackened.resize(windows);
  for (std::size_t w = 0; w < windows; ++w) {
    result.normalized_sums[w] = sums[w] / peak;
    result.blackened[w] = result.normalized_sums[w] < threshold;
    if (!result.blackened[w]) continue;
    const std::size_t end = std::min(frames, (w + 1) * width);
    for (std::size_t r = 0; r < seg.n_mels(); ++r) {
      auto row = result.segment.values.row(r);
      std::fill(row.begin() + static_cast<std::ptrdiff_t>(w * width), row.begin() + static_cast<std::ptrdiff_t>(end),
                kDbFloor);
    }
  }
  return result;
}

std::vector<SweepRow> sweep_report(const std::vector<MelSegment>& segments,
                                   const std::vector<double>& windows_s,
                                   const std::vector<double>& thresholds, int sample_rate, int hop) {
  if (segments.empty() || windows_s.empty() || thresholds.empty()) {
    throw Error("sweep_report: segments, windows and thresholds must be non-empty");
  }
  std::vector<SweepRow> rows;
  for (double window_s : windows_s) {
    const int width = threshold_window_frames(window_s, sample_rate, hop);
    for (double threshold : thresholds) {
      std::map<std::string, std::pair<std::size_t, double>> acc;
      for (const auto& seg : segments) {
        auto& [n, sum] = acc[seg.label];
        ++n;
        sum += apply_threshold(seg, width, threshold).blackened_fraction();
      }
      for (const auto& [label, stat] : acc) {
        rows.push_back({window_s, threshold, label, stat.first, stat.second / static_cast<double>(stat.first)});
      }
    }
  }
  return rows;
}

}  // namespace presort
