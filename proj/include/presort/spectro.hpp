#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "presort/corpus.hpp"
#include "presort/matrix.hpp"

namespace presort {

inline constexpr float kDbFloor = -80.0f;

struct SpectroConfig {
  int sample_rate = 16000;
  int n_fft = 1024;
  int hop = 128;
  int n_mels = 128;
  double top_db = 80.0;  // values are floored at -top_db relative to the clip max

  void validate() const;
};

/// 2595 * log10(1 + f / 700). Throws for negative frequencies.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centers of the triangular filters: a uniform mel grid over [0, sr/2] mapped back to Hz.
std::vector<double> mel_center_frequencies(int n_mels, int sample_rate);

/// [n_mels x (n_fft/2 + 1)] triangular filters with unit peak.
Matrix<double> mel_filterbank(int n_mels, int n_fft, int sample_rate);

/// Number of centered frames for a signal of `num_samples` samples.
std::size_t frame_count(std::size_t num_samples, int hop);

/// Hann-windowed (periodic), centered, reflect-padded |X_k|^2, shape
/// [(n_fft/2 + 1) x ceil(len / hop)].
Matrix<double> stft_power(std::span<const float> samples, int n_fft, int hop);
Matrix<double> stft_power(const AudioClip& clip, int n_fft, int hop);

/// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

struct MelSpectrogram {
  Matrix<float> values;  // [n_mels x n_frames] in dB, max 0 for non-silent input
  int n_mels = 0;
  int hop = 0;
  int n_fft = 0;
  int sample_rate = 0;
  std::string clip_id;

  std::size_t n_frames() const { return values.cols(); }
};

/// Filterbank applied to the power spectrogram, then 10*log10(x / max) floored at -top_db.
class MelFrontEnd {
 public:
  explicit MelFrontEnd(const SpectroConfig& cfg);

  const SpectroConfig& config() const { return cfg_; }
  const Matrix<double>& filterbank() const { return filterbank_; }
  MelSpectrogram operator()(const AudioClip& clip) const;

 private:
  SpectroConfig cfg_;
  Matrix<double> filterbank_;
};

MelSpectrogram mel_spectrogram_db(const AudioClip& clip, const SpectroConfig& cfg);

/// Power-to-dB with reference = max(power), floor at -top_db. All-zero input maps to the floor.
Matrix<float> power_to_db(const Matrix<double>& power, double top_db);

struct SnrReport {
  double snr_db = 0.0;
  double signal_energy = 0.0;
  double noise_energy = 0.0;
};

/// 10 * log10(signal / noise).
SnrReport snr_db(double signal_energy, double noise_energy);

/// Debug exports.
void write_matrix_csv(const Matrix<float>& m, const std::filesystem::path& path);
void write_spectrogram_pgm(const MelSpectrogram& spec, const std::filesystem::path& path);

}  // namespace presort
