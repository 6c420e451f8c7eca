#include "presort/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "presort/error.hpp"
#include "presort/rng.hpp"

namespace presort {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr float kPeak = 0.89f;

struct Template {
  double slope;          // relative frequency change over the event
  double vibrato_depth;  // relative
  double vibrato_hz;
  double am_hz;          // amplitude-modulation rate, 0 for none
  int harmonics;
};

Template class_template(int class_index) {
  static const Template kTemplates[] = {
      {0.6, 0.0, 0.0, 0.0, 4},
      {-0.35, 0.0, 0.0, 0.0, 3},
      {0.0, 0.05, 6.0, 0.0, 5},
      {0.25, 0.0, 0.0, 12.0, 4},
  };
  return kTemplates[(class_index - 1) % 4];
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

double mean_power(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

/// Amplitude factor that puts `power` at `snr_db` above `reference_power`.
double snr_gain(double power, double reference_power, double snr_db) {
  if (power <= 0.0) return 0.0;
  return std::sqrt(reference_power * std::pow(10.0, snr_db / 10.0) / power);
}

void hann_taper(std::span<double> x, std::size_t fade) {
  fade = std::min(fade, x.size() / 2);
  for (std::size_t i = 0; i < fade; ++i) {
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / fade);
    x[i] *= w;
    x[x.size() - 1 - i] *= w;
  }
}

}  // namespace

double template_fundamental_hz(int class_index) {
  if (class_index < 1) throw Error("background has no event template");
  return 220.0 * std::pow(1.45, (class_index - 1) % 6);
}

void SyntheticSpec::validate() const {
  if (classes.size() < 2) throw Error("synthetic spec needs at least 2 classes");
  if (canonical_label(classes.front()) != kBackground) {
    throw Error("synthetic spec: class 0 must be background");
  }
  if (counts.size() != classes.size()) throw Error("synthetic spec: one count per class required");
  for (int c : counts) {
    if (c <= 0) throw Error("synthetic spec: clip counts must be positive");
  }
  if (!(min_duration_s > 0.0) || !(max_duration_s >= min_duration_s)) {
    throw Error("synthetic spec: duration range must be positive and ordered");
  }
  if (!(event_min_s > 0.0) || !(event_max_s >= event_min_s)) {
    throw Error("synthetic spec: event length range must be positive and ordered");
  }
  if (!(snr_max_db >= snr_min_db)) throw Error("synthetic spec: SNR range must be ordered");
  if (sample_rate <= 0) throw Error("synthetic spec: sample rate must be positive");
  if (distractor_rate_hz < 0.0) throw Error("synthetic spec: distractor rate must be >= 0");
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed,
                                          const fs::path& out_dir) {
  spec.validate();
  SyntheticCorpus corpus;
  corpus.manifest.label_space = LabelSpace(spec.classes);
  corpus.manifest.base_dir = out_dir;
  const double sr = spec.sample_rate;

  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const std::string& label = corpus.manifest.label_space.name(c);
    for (int k = 0; k < spec.counts[c]; ++k) {
      Rng rng = make_rng(seed, {0x5e7, c, static_cast<std::uint64_t>(k)});
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::normal_distribution<double> gauss(0.0, 1.0);
      auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

      const double duration = uniform(spec.min_duration_s, spec.max_duration_s);
      const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration * sr)));

      // Colored background: white noise through a one-pole low-pass, unit power.
      std::vector<double> signal(n);
      const double pole = uniform(0.0, 0.95);
      double state = 0.0;
      for (auto& s : signal) {
        state = pole * state + gauss(rng);
        s = state;
      }
      const double noise_power = mean_power(signal);
      for (auto& s : signal) s /= std::sqrt(noise_power);

      // Broadband distractor bursts (background by ground truth).
      std::poisson_distribution<int> bursts(spec.distractor_rate_hz * duration);
      const int n_bursts = spec.distractor_rate_hz > 0.0 ? bursts(rng) : 0;
      for (int b = 0; b < n_bursts; ++b) {
        const auto len = std::min<std::size_t>(n, static_cast<std::size_t>(uniform(0.02, 0.12) * sr) + 1);
        const auto start = static_cast<std::size_t>(uniform(0.0, static_cast<double>(n - len)));
        std::vector<double> burst(len);
        for (auto& v : burst) v = gauss(rng);
        hann_taper(burst, len / 2);
        const double gain = snr_gain(mean_power(burst), 1.0, uniform(spec.snr_min_db, spec.snr_max_db));
        for (std::size_t i = 0; i < len; ++i) signal[start + i] += gain * burst[i];
      }

      EventInterval event;
      event.clip_id = label + "_" + std::to_string(k);
      if (c > 0) {
        const Template tpl = class_template(static_cast<int>(c));
        const double ev_len = std::min(uniform(spec.event_min_s, spec.event_max_s), duration);
        const double ev_start = uniform(0.0, duration - ev_len);
        const auto i0 = static_cast<std::size_t>(std::llround(ev_start * sr));
        const auto len = std::min(n - std::min(i0, n), static_cast<std::size_t>(std::llround(ev_len * sr)));
        const double f0 = template_fundamental_hz(static_cast<int>(c)) * uniform(0.9, 1.1);
        std::vector<double> ev(len);
        double phase = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          const double t = static_cast<double>(i) / sr;
          const double progress = len > 1 ? static_cast<double>(i) / (len - 1) : 0.0;
          double f = f0 * (1.0 + tpl.slope * progress);
          if (tpl.vibrato_depth > 0.0) f *= 1.0 + tpl.vibrato_depth * std::sin(kTwoPi * tpl.vibrato_hz * t);
          phase += kTwoPi * f / sr;
          double v = 0.0;
          for (int h = 1; h <= tpl.harmonics; ++h) v += std::sin(h * phase) / h;
          if (tpl.am_hz > 0.0) v *= 0.6 + 0.4 * std::sin(kTwoPi * tpl.am_hz * t);
          ev[i] = v;
        }
        hann_taper(ev, static_cast<std::size_t>(0.015 * sr));
        const double snr = uniform(spec.snr_min_db, spec.snr_max_db);
        // SNR_dB = 10 log10(signal / noise) over the event's support.
        const double gain = snr_gain(mean_power(ev), 1.0, snr);
        for (std::size_t i = 0; i < len; ++i) signal[i0 + i] += gain * ev[i];
        event.start_s = round6(static_cast<double>(i0) / sr);
        event.end_s = round6(static_cast<double>(i0 + len) / sr);
      }

      double peak = 0.0;
      for (double v : signal) peak = std::max(peak, std::abs(v));
      std::vector<float> pcm(n);
      for (std::size_t i = 0; i < n; ++i) pcm[i] = static_cast<float>(signal[i] / peak * kPeak);

      ClipRecord rec;
      rec.clip_id = event.clip_id;
      rec.path = fs::path("wav") / (rec.clip_id + ".wav");
      rec.label = label;
      rec.duration_s = round6(static_cast<double>(n) / sr);
      write_wav_pcm16(out_dir / rec.path, pcm, spec.sample_rate);
      corpus.events[rec.clip_id] = event;
      corpus.manifest.records.push_back(std::move(rec));
    }
  }

  save_manifest(corpus.manifest, out_dir / "manifest.csv");
  save_events(corpus.events, out_dir / "events.csv");
  return corpus;
}

}  // namespace presort
