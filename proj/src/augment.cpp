#include "presort/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "presort/error.hpp"

namespace presort {

void AugmentConfig::validate() const {
  for (double v : {probability, loudness, shift, noise}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("augmentation fractions must lie in [0, 1]");
  }
  if (mask < 0) throw ConfigError("mask must be >= 0");
  if (pitch_bins < 0) throw ConfigError("pitch_bins must be >= 0");
}

namespace {

inline double to_power(float db) { return db <= kDbFloor ? 0.0 : std::pow(10.0, db / 10.0); }

inline float to_db(double power) {
  if (power <= 0.0) return kDbFloor;
  return static_cast<float>(std::clamp(10.0 * std::log10(power), static_cast<double>(kDbFloor), 0.0));
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

void augment_in_place(std::span<float> v, std::size_t rows, std::size_t cols, const AugmentConfig& cfg,
                      Rng& rng, AugmentTrace* trace) {
  AugmentTrace local;
  AugmentTrace& tr = trace ? *trace : local;
  tr = AugmentTrace{};
  if (!cfg.enabled || cfg.probability <= 0.0 || v.empty()) return;

  std::bernoulli_distribution fire(cfg.probability);
  auto at = [&](std::size_t r, std::size_t c) -> float& { return v[r * cols + c]; };

  if (fire(rng) && cfg.loudness > 0.0) {
    tr.loudness = true;
    tr.gain = std::uniform_real_distribution<double>(1.0 - cfg.loudness, 1.0 + cfg.loudness)(rng);
    const double offset = 10.0 * std::log10(std::max(tr.gain, 1e-12));
    for (auto& x : v) {
      if (x > kDbFloor) x = static_cast<float>(std::clamp(x + offset, static_cast<double>(kDbFloor), 0.0));
    }
  }

  if (fire(rng) && cfg.noise > 0.0) {
    tr.noise = true;
    double mean = 0.0;
    for (float x : v) mean += to_power(x);
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (float x : v) var += (to_power(x) - mean) * (to_power(x) - mean);
    const double sigma = cfg.noise * std::sqrt(var / static_cast<double>(v.size()));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& x : v) x = to_db(std::max(0.0, to_power(x) + sigma * gauss(rng)));
  }

  if (fire(rng) && cfg.shift > 0.0) {
    const int max_shift = static_cast<int>(std::lround(cfg.shift * static_cast<double>(cols)));
    tr.shift = true;
    tr.shift_frames = uniform_int(rng, -max_shift, max_shift);
    if (tr.shift_frames != 0) {
      std::vector<float> row(cols);
      for (std::size_t r = 0; r < rows; ++r) {
        std::fill(row.begin(), row.end(), kDbFloor);
        for (std::size_t c = 0; c < cols; ++c) {
          const long long dst = static_cast<long long>(c) + tr.shift_frames;
          if (dst >= 0 && dst < static_cast<long long>(cols)) row[static_cast<std::size_t>(dst)] = at(r, c);
        }
        std::copy(row.begin(), row.end(), v.begin() + static_cast<std::ptrdiff_t>(r * cols));
      }
    }
  }

  if (fire(rng) && cfg.pitch_bins > 0) {
    tr.pitch = true;
    tr.pitch_shift = uniform_int(rng, -cfg.pitch_bins, cfg.pitch_bins);
    if (tr.pitch_shift != 0) {
      std::vector<float> copy(v.begin(), v.end());
      for (std::size_t r = 0; r < rows; ++r) {
        const long long src = static_cast<long long>(r) - tr.pitch_shift;
        for (std::size_t c = 0; c < cols; ++c) {
          at(r, c) = (src >= 0 && src < static_cast<long long>(rows))
                         ? copy[static_cast<std::size_t>(src) * cols + c]
                         : kDbFloor;
        }
      }
    }
  }

  if (fire(rng) && cfg.mask > 0) {
    tr.freq_mask = true;
    const int run = std::min<int>(cfg.mask, static_cast<int>(rows));
    tr.freq_mask_start = uniform_int(rng, 0, static_cast<int>(rows) - run);
    for (int r = tr.freq_mask_start; r < tr.freq_mask_start + run; ++r) {
      for (std::size_t c = 0; c < cols; ++c) at(static_cast<std::size_t>(r), c) = kDbFloor;
    }
  }

  if (fire(rng) && cfg.mask > 0) {
    tr.time_mask = true;
    const int run = std::min<int>(cfg.mask, static_cast<int>(cols));
    tr.time_mask_start = uniform_int(rng, 0, static_cast<int>(cols) - run);
    for (std::size_t r = 0; r < rows; ++r) {
      for (int c = tr.time_mask_start; c < tr.time_mask_start + run; ++c) at(r, static_cast<std::size_t>(c)) = kDbFloor;
    }
  }
}

MelSegment augment(const MelSegment& seg, const AugmentConfig& cfg, Rng& rng, AugmentTrace* trace) {
  MelSegment out = seg;
  augment_in_place(out.values.data(), out.n_mels(), out.n_frames(), cfg, rng, trace);
  return out;
}

std::map<std::string, double> class_weights(const std::vector<std::string>& labels) {
  if (labels.empty()) throw Error("class_weights: empty label list");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  std::map<std::string, double> weights;
  const double total = static_cast<double>(labels.size());
  for (const auto& [label, n] : counts) {
    weights[label] = total / (static_cast<double>(counts.size()) * static_cast<double>(n));
  }
  return weights;
}

std::vector<double> class_weights(std::span<const int> labels, std::size_t num_classes) {
  if (labels.empty()) throw Error("class_weights: empty label list");
  std::vector<std::size_t> counts(num_classes, 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) throw Error("class_weights: label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  const auto present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](auto n) { return n > 0; }));
  std::vector<double> weights(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) weights[c] = static_cast<double>(labels.size()) / (present * static_cast<double>(counts[c]));
  }
  return weights;
}

std::vector<std::size_t> weighted_sample(std::span<const double> weights, std::size_t count, Rng& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("weighted_sample: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw Error("weighted_sample: all weights are zero");
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = dist(rng);
  return out;
}

}  // namespace presort
