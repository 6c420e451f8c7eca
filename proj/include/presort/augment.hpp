#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "presort/rng.hpp"
#include "presort/segmenter.hpp"

namespace presort {

struct AugmentConfig {
  double probability = 0.5;  // chance that each augmentation fires, independently
  double loudness = 0.3;     // gain drawn from [1 - l, 1 + l] in linear power
  double shift = 0.3;        // max time shift as a fraction of the segment width
  double noise = 0.3;        // noise std relative to the segment's linear-power std
  int mask = 5;              // run length of the frequency and time masks
  int pitch_bins = 3;        // max mel-bin translation
  bool enabled = true;

  void validate() const;
};

/// Which augmentations fired on the last call, for tests and diagnostics.
struct AugmentTrace {
  bool loudness = false;
  bool noise = false;
  bool shift = false;
  bool pitch = false;
  bool freq_mask = false;
  bool time_mask = false;
  double gain = 1.0;
  int shift_frames = 0;
  int pitch_shift = 0;
  int freq_mask_start = -1;
  int time_mask_start = -1;
};

/// Returns an augmented copy; shape and label are preserved. Values stay in [floor, 0] dB.
MelSegment augment(const MelSegment& seg, const AugmentConfig& cfg, Rng& rng, AugmentTrace* trace = nullptr);

/// In-place variant over a raw [rows x cols] dB buffer.
void augment_in_place(std::span<float> values, std::size_t rows, std::size_t cols, const AugmentConfig& cfg,
                      Rng& rng, AugmentTrace* trace = nullptr);

/// weight(c) = total / (num_classes * count(c)).
std::map<std::string, double> class_weights(const std::vector<std::string>& labels);
/// Same rule over integer class ids; classes absent from `labels` get weight 0.
std::vector<double> class_weights(std::span<const int> labels, std::size_t num_classes);

/// i.i.d. draws with replacement, P(i) proportional to weights[i].
std::vector<std::size_t> weighted_sample(std::span<const double> weights, std::size_t count, Rng& rng);

}  // namespace presort
