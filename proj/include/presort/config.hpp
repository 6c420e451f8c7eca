#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "presort/augment.hpp"
#include "presort/corpus.hpp"
#include "presort/net.hpp"
#include "presort/spectro.hpp"
#include "presort/synth.hpp"

namespace presort {

enum class Regime { baseline, presort, presort_threshold };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

struct SegmentConfig {
  double length_s = 0.7;
  bool pad_last = true;
};

struct ThresholdConfig {
  double window_s = 0.4;
  double threshold = 0.3;
};

struct OptimConfig {
  double learning_rate = 1e-4;
  int lr_step_epochs = 100;
  double lr_decay = 0.05;  // multiplicative, applied every lr_step_epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double focal_gamma = 2.0;
};

/// Everything one pipeline run depends on. Defaults are the full-size settings
/// (16 kHz, 1024-point FFT, hop 128, 128 mel bands, 0.7 s segments, 150/200
/// epochs, batch 32, lr 1e-4, ...).
struct RunConfig {
  std::uint64_t seed = 0;
  Regime regime = Regime::presort;
  int epochs_binary = 150;
  int epochs_multiclass = 200;
  int batch_size = 32;
  int samples_per_epoch = 0;      // weighted draws per epoch; 0 = training set size
  double relabel_threshold = 0.5; // tau: flip when p(background) >= tau
  bool thresholding_enabled = false;
  bool warm_start = true;         // multi-class body initialized from the binary model
  int presort_votes = 1;          // >1: flip only if a majority of independently seeded binary models agree
  int workers = 1;
  bool augment_binary = false;    // augmentation in the binary stage too (multi-class always augments)
  SplitRatio split_ratio;

  SpectroConfig spectro;
  SegmentConfig segment;
  ThresholdConfig threshold;
  AugmentConfig augment;
  NetConfig net;
  OptimConfig optim;
  SyntheticSpec synth;

  /// Network input geometry implied by spectro + segment settings.
  NetConfig network_geometry() const;
  void validate() const;
};

/// INI file: `[section]` headers with `key = value` lines. Unknown keys are errors.
RunConfig load_run_config(const std::filesystem::path& path);
/// `dotted` is `section.key`.
void apply_override(RunConfig& cfg, std::string_view dotted, std::string_view value);
/// Fully resolved configuration in the same INI format load_run_config reads.
std::string to_ini(const RunConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

/// All recognized `section.key` names.
std::vector<std::string> config_keys();

}  // namespace presort
