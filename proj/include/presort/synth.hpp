#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "presort/corpus.hpp"

namespace presort {

/// Weakly labeled corpus description. Class 0 must be background (noise only);
/// every other class places one harmonic event into a random sub-interval of
/// an otherwise noise-only clip.
struct SyntheticSpec {
  std::vector<std::string> classes{"background", "chimpanzee", "mandrill", "redcap", "guenon"};
  std::vector<int> counts{10000, 5000, 2000, 1500, 1500};
  int sample_rate = 16000;
  double min_duration_s = 0.145;
  double max_duration_s = 3.0;
  double event_min_s = 0.3;
  double event_max_s = 0.6;
  double snr_min_db = 0.0;
  double snr_max_db = 12.0;
  /// Expected number of short broadband distractor bursts per second, in every clip.
  double distractor_rate_hz = 0.6;

  void validate() const;
};

struct SyntheticCorpus {
  Manifest manifest;
  EventTable events;
};

/// Writes `wav/<clip>.wav`, `manifest.csv` and `events.csv` under `out_dir`.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed,
                                          const fs::path& out_dir);

/// Base fundamental (Hz) of a class template, before the per-clip +-10% jitter.
double template_fundamental_hz(int class_index);

}  // namespace presort
