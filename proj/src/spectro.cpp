#include "presort/spectro.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>

#include "presort/error.hpp"
#include "presort/image.hpp"

namespace presort {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// The FFTW planner is not thread-safe; executing a plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffers {
  explicit FftwBuffers(int n)
      : in(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~FftwBuffers() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffers(const FftwBuffers&) = delete;
  FftwBuffers& operator=(const FftwBuffers&) = delete;

  double* in;
  fftw_complex* out;
  fftw_plan plan;
};

/// Index into a signal of length n after reflect padding (numpy "reflect").
std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<long long>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

void SpectroConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (!is_power_of_two(n_fft)) throw ConfigError("n_fft must be a power of two");
  if (hop <= 0) throw ConfigError("hop must be positive");
  if (n_mels < 1) throw ConfigError("n_mels must be >= 1");
  if (!(top_db > 0.0)) throw ConfigError("top_db must be positive");
}

double hz_to_mel(double hz) {
  if (!(hz >= 0.0)) throw Error("hz_to_mel: frequency must be >= 0");
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies(int n_mels, int sample_rate) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m) centers[m] = mel_to_hz(top * (m + 1) / (n_mels + 1));
  return centers;
}

Matrix<double> mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  if (n_mels < 1) throw Error("mel_filterbank: n_mels must be >= 1");
  if (!is_power_of_two(n_fft)) throw Error("mel_filterbank: n_fft must be a power of two");
  if (sample_rate <= 0) throw Error("mel_filterbank: sample_rate must be positive");

  const int bins = n_fft / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(top * i / (n_mels + 1));

  Matrix<double> fb(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    bool support = false;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      const double w = std::max(0.0, std::min((f - lo) / (center - lo), (hi - f) / (hi - center)));
      fb(m, k) = w;
      support = support || w > 0.0;
    }
    if (!support) {
      throw Error("mel_filterbank: filter " + std::to_string(m) + " has empty support; n_mels=" +
                  std::to_string(n_mels) + " too large for n_fft=" + std::to_string(n_fft));
    }
  }
  return fb;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

std::size_t frame_count(std::size_t num_samples, int hop) {
  return (num_samples + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop);
}

Matrix<double> stft_power(std::span<const float> samples, int n_fft, int hop) {
  if (hop <= 0) throw Error("stft_power: hop must be positive");
  if (!is_power_of_two(n_fft)) throw Error("stft_power: n_fft must be a power of two");
  if (samples.empty()) throw Error("stft_power: empty signal");

  const std::size_t frames = frame_count(samples.size(), hop);
  const int bins = n_fft / 2 + 1;
  const auto window = hann_window(n_fft);
  FftwBuffers fft(n_fft);
  Matrix<double> power(bins, frames);
  const long long half = n_fft / 2;
  for (std::size_t t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t) * hop - half;
    for (int i = 0; i < n_fft; ++i) {
      fft.in[i] = window[i] * samples[reflect_index(start + i, samples.size())];
    }
    fftw_execute(fft.plan);
    for (int k = 0; k < bins; ++k) {
      power(k, t) = fft.out[k][0] * fft.out[k][0] + fft.out[k][1] * fft.out[k][1];
    }
  }
  return power;
}

Matrix<double> stft_power(const AudioClip& clip, int n_fft, int hop) {
  return stft_power(std::span<const float>(clip.samples), n_fft, hop);
}

Matrix<float> power_to_db(const Matrix<double>& power, double top_db) {
  double ref = 0.0;
  for (double v : power.data()) ref = std::max(ref, v);
  Matrix<float> db(power.rows(), power.cols(), static_cast<float>(-top_db));
  if (ref <= 0.0) return db;
  constexpr double kAmin = 1e-30;
  for (std::size_t i = 0; i < power.size(); ++i) {
    const double v = 10.0 * std::log10(std::max(power.data()[i], kAmin) / ref);
    db.data()[i] = static_cast<float>(std::max(v, -top_db));
  }
  return db;
}

MelFrontEnd::MelFrontEnd(const SpectroConfig& cfg)
    : cfg_(cfg), filterbank_((cfg.validate(), mel_filterbank(cfg.n_mels, cfg.n_fft, cfg.sample_rate))) {}

MelSpectrogram MelFrontEnd::operator()(const AudioClip& clip) const {
  if (clip.sample_rate != cfg_.sample_rate) {
    throw Error("clip " + clip.clip_id + " has sample rate " + std::to_string(clip.sample_rate) +
                ", expected " + std::to_string(cfg_.sample_rate));
  }
  const auto power = stft_power(clip, cfg_.n_fft, cfg_.hop);
  const std::size_t bins = power.rows();
  const std::size_t frames = power.cols();
  Matrix<double> mel(cfg_.n_mels, frames);
  for (int m = 0; m < cfg_.n_mels; ++m) {
    auto out = mel.row(m);
    for (std::size_t k = 0; k < bins; ++k) {
      const double w = filterbank_(m, k);
      if (w == 0.0) continue;
      auto in = power.row(k);
      for (std::size_t t = 0; t < frames; ++t) out[t] += w * in[t];
    }
  }
  MelSpectrogram spec;
  spec.values = power_to_db(mel, cfg_.top_db);
  spec.n_mels = cfg_.n_mels;
  spec.hop = cfg_.hop;
  spec.n_fft = cfg_.n_fft;
  spec.sample_rate = cfg_.sample_rate;
  spec.clip_id = clip.clip_id;
  return spec;
}

MelSpectrogram mel_spectrogram_db(const AudioClip& clip, const SpectroConfig& cfg) {
  return MelFrontEnd(cfg)(clip);
}

SnrReport snr_db(double signal_energy, double noise_energy) {
  if (!(noise_energy > 0.0)) throw Error("snr_db: noise energy must be > 0");
  if (!(signal_energy >= 0.0)) throw Error("snr_db: signal energy must be >= 0");
  return {10.0 * std::log10(signal_energy / noise_energy), signal_energy, noise_energy};
}

void write_matrix_csv(const Matrix<float>& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.4f", m(r, c));
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_spectrogram_pgm(const MelSpectrogram& spec, const std::filesystem::path& path) {
  // Low mel bands at the bottom, as spectrograms are usually drawn.
  const std::size_t h = spec.values.rows(), w = spec.values.cols();
  GrayImage img(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double v = (spec.values(r, c) - kDbFloor) / -kDbFloor;
      img.at(c, h - 1 - r) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }
  img.write_pgm(path);
}

}  // namespace presort
