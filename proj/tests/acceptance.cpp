// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "presort/augment.hpp"
#include "presort/config.hpp"
#include "presort/metrics.hpp"
#include "presort/net.hpp"
#include "presort/pipeline.hpp"
#include "presort/spectro.hpp"
#include "presort/synth.hpp"
#include "presort/threshold.hpp"

namespace fs = std::filesystem;
using namespace presort;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects failures inside one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++count_;
  }
  Outcome done(std::string detail) const {
    Outcome o{count_ == 0, std::move(detail)};
    for (const auto& f : failures_) o.detail += "; " + f;
    if (count_ > static_cast<int>(failures_.size())) o.detail += fmt::format("; ... {} failures", count_);
    return o;
  }

 private:
  std::vector<std::string> failures_;
  int count_ = 0;
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

fs::path scratch_root() {
  const auto p = fs::temp_directory_path() / "presort_acceptance";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

MelSegment random_segment(std::size_t rows, std::size_t cols, std::uint64_t seed, const std::string& label) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> db(-70.0f, 0.0f);
  MelSegment s;
  s.values = Matrix<float>(rows, cols);
  for (auto& v : s.values.data()) v = db(rng);
  s.label = label;
  s.clip_id = fmt::format("{}_{}", label, seed);
  return s;
}

// ---------------------------------------------------------------- A/B experiment

struct ArmResult {
  double uar = 0.0;       // headline (event-overlap) test labels
  double weak_uar = 0.0;  // clip labels on every segment
  std::size_t flipped = 0;
  std::size_t zero_overlap = 0;
  std::set<std::string> test_views;
};

ArmResult summarize(const nlohmann::json& j) {
  ArmResult r;
  r.uar = j["headline"]["uar"].get<double>();
  r.weak_uar = j["test"]["weak"]["uar"].get<double>();
  for (const auto& [k, v] : j["test"].items()) r.test_views.insert(k);
  if (j.contains("relabel")) {
    for (const char* s : {"train", "val", "test"}) {
      r.flipped += j["relabel"][s]["flipped"].get<std::size_t>();
      r.zero_overlap += j["relabel"][s]["zero_overlap"].get<std::size_t>();
    }
  }
  return r;
}

struct Experiment {
  std::map<std::uint64_t, ArmResult> baseline, presort, thresholded;
  double ab_seconds = 0.0;
  std::string error;
};

Experiment run_ab(const fs::path& root) {
  Experiment ex;
  try {
    RunConfig base = load_run_config(PRESORT_DESK_CONFIG);
    base.workers = workers();
    base.validate();
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed : {0, 1, 2}) {
      RunConfig cfg = base;
      cfg.seed = seed;
      const auto corpus = generate_synthetic_corpus(cfg.synth, seed, root / fmt::format("corpus{}", seed));
      const auto manifest = split(corpus.manifest, cfg.split_ratio, seed);
      const auto data = prepare_segments(manifest, cfg, corpus.events);
      for (Regime regime : {Regime::baseline, Regime::presort}) {
        const auto rep = run_experiment(regime, cfg, data);
        const auto arm = summarize(rep.json);
        (regime == Regime::baseline ? ex.baseline : ex.presort)[seed] = arm;
        std::cout << fmt::format("  seed {} {:<8} test UAR {:.4f} (weak labels {:.4f})", seed, to_string(regime), arm.uar,
                                 arm.weak_uar);
        if (regime != Regime::baseline) std::cout << fmt::format(", {} flips, {} outside events", arm.flipped, arm.zero_overlap);
        std::cout << std::endl;
      }
      if (seed == 0) {
        const auto t_pause = std::chrono::steady_clock::now();
        const auto rep = run_experiment(Regime::presort_threshold, cfg, data);
        ex.thresholded[seed] = summarize(rep.json);
        std::cout << fmt::format("  seed 0 presort+threshold test UAR {:.4f}", ex.thresholded[seed].uar) << std::endl;
        // The ablation arm is not part of the timed A/B budget.
        ex.ab_seconds -= std::chrono::duration<double>(std::chrono::steady_clock::now() - t_pause).count();
      }
    }
    ex.ab_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } catch (const std::exception& e) {
    ex.error = e.what();
  }
  return ex;
}

Outcome criterion_ab(const Experiment& ex) {
  if (!ex.error.empty()) return {false, ex.error};
  double b = 0.0, p = 0.0;
  for (const auto& [s, r] : ex.baseline) b += r.uar;
  for (const auto& [s, r] : ex.presort) p += r.uar;
  b /= ex.baseline.size();
  p /= ex.presort.size();
  const double margin_pp = 100.0 * (p - b);
  Check c;
  c.expect(ex.baseline.size() == 3 && ex.presort.size() == 3, "expected 3 seeds per arm");
  c.expect(margin_pp >= 5.0, fmt::format("margin {:.2f} pp < 5 pp", margin_pp));
  c.expect(ex.ab_seconds < 1200.0, fmt::format("runtime {:.0f} s >= 1200 s", ex.ab_seconds));
  return c.done(fmt::format("mean test UAR presort {:.4f} vs baseline {:.4f} (+{:.2f} pp), {:.0f} s on {} thread(s)", p, b,
                            margin_pp, ex.ab_seconds, workers()));
}

Outcome criterion_relabel_precision(const Experiment& ex) {
  if (!ex.error.empty()) return {false, ex.error};
  std::size_t flipped = 0, genuine = 0;
  for (const auto& [s, r] : ex.presort) flipped += r.flipped, genuine += r.zero_overlap;
  const double precision = flipped ? static_cast<double>(genuine) / static_cast<double>(flipped) : 0.0;
  Check c;
  c.expect(flipped > 0, "no segment was flipped");
  c.expect(precision >= 0.8, fmt::format("precision {:.3f} < 0.8", precision));
  return c.done(fmt::format("{} of {} flipped segments lie outside the event interval ({:.1f}%)", genuine, flipped,
                            100.0 * precision));
}

Outcome criterion_threshold_arm(const Experiment& ex) {
  if (!ex.error.empty()) return {false, ex.error};
  Check c;
  c.expect(ex.thresholded.count(0) == 1, "presort+threshold arm did not run");
  if (!ex.thresholded.count(0) || !ex.presort.count(0)) return c.done("");
  const auto& t = ex.thresholded.at(0);
  const auto& p = ex.presort.at(0);
  c.expect(t.test_views == p.test_views, "report views differ from the presort arm");
  c.expect(std::isfinite(t.uar) && t.flipped > 0, "threshold arm produced no usable result");
  return c.done(fmt::format("seed 0 test UAR {:.4f} with thresholding vs {:.4f} without; {} vs {} flips", t.uar, p.uar,
                            t.flipped, p.flipped));
}

// ---------------------------------------------------------------- oracles

Outcome criterion_metrics() {
  Check c;
  const LabelSpace space({"background", "chimpanzee", "mandrill", "redcap", "guenon"});
  std::mt19937_64 rng(20240);
  std::uniform_int_distribution<int> cls(0, 4), bit(0, 1);
  std::vector<int> t(1000), p(1000), b(1000), bt(1000);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = cls(rng), p[i] = cls(rng), b[i] = bit(rng);
  for (std::size_t i = 0; i < t.size(); ++i) bt[i] = t[i] == 0 ? 0 : 1;
  const auto ref = oracle::recount(t, p, b, 5);
  const auto cm = confusion(t, p, space);
  for (int r = 0; r < 5; ++r) {
    for (int k = 0; k < 5; ++k) c.expect(static_cast<long>(cm(r, k)) == ref.confusion[r][k], "confusion cell");
  }
  c.expect(std::abs(accuracy(cm) - ref.accuracy) <= 1e-12, "accuracy");
  c.expect(std::abs(uar(cm) - ref.uar) <= 1e-12, "UAR");
  const double f1 = f1_binary(confusion(bt, b, LabelSpace::binary())).f1;
  c.expect(std::abs(f1 - oracle::f1_positive(bt, b)) <= 1e-12, "F1");
  const auto mm = presort::mismatch(t, b, space);
  for (int r = 0; r < 5; ++r) {
    for (int k = 0; k < 2; ++k) c.expect(static_cast<long>(mm.counts[r][k]) == ref.mismatch[r][k], "mismatch cell");
  }
  return c.done(fmt::format("accuracy {:.6f}, UAR {:.6f}, F1 {:.6f} on 1000 random pairs", ref.accuracy, ref.uar, f1));
}

Outcome criterion_dsp() {
  Check c;
  c.expect(std::abs(hz_to_mel(700.0) - 2595.0 * std::log10(2.0)) <= 1e-9, "hz_to_mel(700)");
  // Centers against a bisection inverse of the mel formula.
  double worst_hz = 0.0;
  for (int n_mels : {32, 128}) {
    const auto centers = mel_center_frequencies(n_mels, 16000);
    const double top = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
    for (int m = 0; m < n_mels; ++m) {
      const double target = top * (m + 1) / (n_mels + 1);
      double lo = 0.0, hi = 8000.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (2595.0 * std::log10(1.0 + mid / 700.0) < target ? lo : hi) = mid;
      }
      worst_hz = std::max(worst_hz, std::abs(centers[m] - 0.5 * (lo + hi)));
    }
  }
  c.expect(worst_hz <= 1e-6, fmt::format("center error {:.3g} Hz", worst_hz));

  std::mt19937_64 rng(5);
  std::normal_distribution<float> g;
  std::vector<float> x(4000);
  for (auto& v : x) v = g(rng);
  const int n_fft = 512, hop = 128;
  const auto p = stft_power(x, n_fft, hop);
  const auto reflect = [&](long long i) {
    const long long n = static_cast<long long>(x.size());
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
    return x[static_cast<std::size_t>(i)];
  };
  double worst_rel = 0.0;
  for (std::size_t t = 0; t < p.cols(); ++t) {
    double energy = 0.0, spectral = 0.0;
    for (int i = 0; i < n_fft; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n_fft);
      const double v = w * reflect(static_cast<long long>(t) * hop - n_fft / 2 + i);
      energy += v * v;
    }
    for (std::size_t k = 0; k < p.rows(); ++k) spectral += (k == 0 || k == p.rows() - 1 ? 1.0 : 2.0) * p(k, t);
    worst_rel = std::max(worst_rel, rel_err(spectral / n_fft, energy));
  }
  c.expect(worst_rel <= 1e-6, fmt::format("Parseval error {:.3g}", worst_rel));
  for (double e : {1e-3, 1.0, 42.0}) c.expect(snr_db(10.0 * e, e).snr_db == 10.0, "snr_db(10x, x)");
  return c.done(fmt::format("center error {:.2g} Hz, Parseval error {:.2g} over {} frames", worst_hz, worst_rel, p.cols()));
}

NetConfig tiny_net(HeadKind head) {
  NetConfig n;
  n.input_height = 8;
  n.input_width = 8;
  n.channels = {4, 4};
  n.head = head;
  n.num_classes = head == HeadKind::sigmoid ? 2 : 3;
  n.use_batchnorm = head == HeadKind::softmax;
  n.use_dropout = head == HeadKind::softmax;
  return n;
}

Outcome criterion_gradients() {
  Check c;
  double worst = 0.0;
  for (HeadKind head : {HeadKind::sigmoid, HeadKind::softmax}) {
    Network<double> net(tiny_net(head), 31);
    const std::size_t batch = 4;
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(batch * 64);
    for (auto& v : x) v = u(rng);
    const std::vector<double> yb{0, 1, 0, 1};
    const std::vector<int> yc{0, 1, 2, 0};
    auto loss = [&](std::vector<double>* g) {
      Rng drop(7);
      const auto out = net.forward(x, batch, Mode::train, &drop);
      auto l = head == HeadKind::sigmoid ? bce_loss_logits<double>(out, yb) : focal_loss_logits<double>(out, 3, yc, 2.0);
      if (g) *g = l.grad;
      return l.value;
    };
    std::vector<double> g;
    loss(&g);
    net.zero_grad();
    net.backward(g);
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t t = 0; t < net.tensors().size(); ++t) {
      if (!net.tensors()[t].trainable) continue;
      for (std::size_t j = 0; j < net.tensors()[t].numel(); ++j) slots.emplace_back(t, j);
    }
    std::shuffle(slots.begin(), slots.end(), rng);
    slots.resize(100);
    for (auto [t, j] : slots) {
      auto& prm = net.tensors()[t];
      const double saved = prm.value[j], h = 1e-6;
      prm.value[j] = saved + h;
      const double up = loss(nullptr);
      prm.value[j] = saved - h;
      const double down = loss(nullptr);
      prm.value[j] = saved;
      const double numeric = (up - down) / (2 * h);
      const double err = std::abs(prm.grad[j] - numeric) / std::max({std::abs(prm.grad[j]), std::abs(numeric), 1e-6});
      worst = std::max(worst, err);
      c.expect(err <= 1e-3, fmt::format("{}[{}] relative error {:.3g}", prm.name, j, err));
    }
  }
  // Scalar loss probes: closed forms and finite differences of the probability gradients.
  double worst_loss = 0.0;
  const std::vector<double> one{1.0};
  for (double pv : {0.1, 0.7}) {
    worst_loss = std::max(worst_loss, std::abs(bce_loss<double>(std::vector<double>{pv}, one).value + std::log(pv)));
    const double h = 1e-7;
    const double numeric = (bce_loss<double>(std::vector<double>{pv + h}, one).value -
                            bce_loss<double>(std::vector<double>{pv - h}, one).value) / (2 * h);
    worst_loss = std::max(worst_loss, std::abs(bce_loss<double>(std::vector<double>{pv}, one).grad[0] - numeric));
  }
  const std::vector<int> y{1};
  for (double gamma : {0.0, 2.0}) {
    const std::vector<double> q{0.2, 0.7, 0.1};
    worst_loss = std::max(worst_loss, std::abs(focal_loss<double>(q, 3, y, gamma).value +
                                               std::pow(0.3, gamma) * std::log(0.7)));
    const double h = 1e-7;
    auto at = [&](double v) { return focal_loss<double>(std::vector<double>{0.2, v, 0.1}, 3, y, gamma).value; };
    worst_loss = std::max(worst_loss, std::abs(focal_loss<double>(q, 3, y, gamma).grad[1] - (at(0.7 + h) - at(0.7 - h)) / (2 * h)));
  }
  c.expect(worst_loss <= 1e-4, fmt::format("loss probe error {:.3g}", worst_loss));
  return c.done(fmt::format("worst parameter gradient error {:.2g} (2x100 params), loss probe error {:.2g}", worst,
                            worst_loss));
}

Outcome criterion_threshold() {
  Check c;
  MelSegment hand;
  hand.values = Matrix<float>(1, 3);
  const double e[] = {10, 2, 9};
  for (int t = 0; t < 3; ++t) hand.values(0, t) = static_cast<float>(10.0 * std::log10(e[t] / 10.0));
  const auto r = apply_threshold(hand, 1, 0.3);
  c.expect(r.blackened == std::vector<bool>{false, true, false}, "hand example");
  c.expect(r.segment.values(0, 1) == kDbFloor && r.segment.values(0, 0) == hand.values(0, 0), "hand example values");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto seg = random_segment(8, 88, seed, "guenon");
    std::vector<bool> prev;
    for (double th : {0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0}) {
      const auto cur = apply_threshold(seg, 11, th);
      if (!prev.empty()) {
        for (std::size_t w = 0; w < prev.size(); ++w) c.expect(!prev[w] || cur.blackened[w], "monotonicity");
      }
      prev = cur.blackened;
      const auto twice = apply_threshold(cur.segment, 11, th);
      c.expect(twice.segment.values == cur.segment.values, "idempotence");
    }
  }
  return c.done("hand example, monotonicity and idempotence on 50 random segments x 8 thresholds");
}

Outcome criterion_presort() {
  Check c;
  const std::vector<std::string> labels{"background", "chimpanzee", "mandrill", "redcap", "guenon"};
  std::vector<MelSegment> segs;
  for (std::size_t i = 0; i < 200; ++i) {
    segs.push_back(random_segment(16, 12, 500 + i, labels[i % labels.size()]));
    segs.back().segment_index = static_cast<int>(i);
  }
  NetConfig nc;
  nc.input_height = 16;
  nc.input_width = 12;
  nc.channels = {4, 8};
  Network<float> model(binary_variant(nc), 9);
  std::set<std::size_t> prev;
  bool first = true;
  std::size_t max_flips = 0;
  for (double tau = 0.0; tau <= 1.0001; tau += 0.05) {
    const auto res = presort::presort(model, segs, tau);
    std::set<std::size_t> cur;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].label == "background") c.expect(res.segments[i].label == "background", "background modified");
      if (res.segments[i].label != segs[i].label) cur.insert(i);
    }
    if (!first) c.expect(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()), "flip set grew with tau");
    max_flips = std::max(max_flips, cur.size());
    prev = cur;
    first = false;
  }
  for (double tau : {1.0001, 1.5, 2.0}) {
    const auto res = presort::presort(model, segs, tau);
    c.expect(res.records.empty(), "tau > 1 changed labels");
    for (std::size_t i = 0; i < segs.size(); ++i) c.expect(res.segments[i].label == segs[i].label, "tau > 1 not identity");
  }
  return c.done(fmt::format("21 thresholds on 200 segments, flip sets shrink from {} to {}", max_flips, prev.size()));
}

Outcome criterion_schedule_sampler() {
  Check c;
  c.expect(lr_schedule(99, 1e-4, 100, 0.05) == 1e-4, "lr(99)");
  c.expect(std::abs(lr_schedule(100, 1e-4, 100, 0.05) - 5e-6) <= 1e-18, "lr(100)");
  const std::vector<int> per_class{10000, 5000, 2000, 1500, 1500};
  std::vector<int> labels;
  for (int k = 0; k < 5; ++k) labels.insert(labels.end(), per_class[k], k);
  const auto cw = class_weights(labels, 5);
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = cw[static_cast<std::size_t>(labels[i])];
  Rng rng(99);
  const std::size_t draws = 100000;
  std::vector<double> freq(5, 0.0);
  for (auto i : weighted_sample(w, draws, rng)) freq[static_cast<std::size_t>(labels[i])] += 1.0;
  double chi2 = 0.0, worst = 0.0;
  for (double f : freq) {
    chi2 += (f - draws / 5.0) * (f - draws / 5.0) / (draws / 5.0);
    worst = std::max(worst, std::abs(f / draws - 0.2) / 0.2);
  }
  c.expect(worst <= 0.02, fmt::format("class frequency off by {:.2f}%", 100 * worst));
  c.expect(chi2 < 13.2767, fmt::format("chi-square {:.2f} >= 13.28", chi2));  // 4 dof, alpha 0.01
  return c.done(fmt::format("lr(99) = {:.1e}, lr(100) = {:.1e}; chi-square {:.2f}, worst class deviation {:.2f}%",
                            lr_schedule(99, 1e-4), lr_schedule(100, 1e-4), chi2, 100 * worst));
}

// ---------------------------------------------------------------- CLI determinism

int sh(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_determinism(const fs::path& root) {
  Check c;
  const std::string cli = PRESORT_CLI_PATH, cfg = PRESORT_DESK_CONFIG;
  const auto dir = root / "determinism";
  const std::string quiet = " > " + (dir / "log.txt").string() + " 2>&1";
  fs::create_directories(dir);
  if (sh(fmt::format("{} synth --config {} --out {} --seed 7{}", cli, cfg, (dir / "corpus").string(), quiet)) != 0) {
    return {false, "synth failed, see " + (dir / "log.txt").string()};
  }
  const auto manifest = (dir / "corpus" / "manifest.csv").string();
  std::vector<std::string> reports, relabels;
  for (int run = 0; run < 2; ++run) {
    const auto out = dir / fmt::format("run{}", run);
    // Different worker counts on purpose: results must not depend on them.
    const int rc = sh(fmt::format("{} run --regime presort --config {} --manifest {} --out {} --seed 7 --workers {}{}", cli, cfg,
                                  manifest, out.string(), run == 0 ? 1 : std::max(2, workers()), quiet));
    if (rc != 0) return {false, fmt::format("run {} failed, see {}", run, (dir / "log.txt").string())};
    reports.push_back(strip_timing(nlohmann::json::parse(slurp(out / "report.json"))).dump(2));
    relabels.push_back(slurp(out / "relabels.csv"));
  }
  c.expect(reports[0] == reports[1], "report.json differs");
  c.expect(relabels[0] == relabels[1], "relabels.csv differs");
  return c.done(fmt::format("two runs, {} report bytes and {} relabel bytes identical", reports[0].size(), relabels[0].size()));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const auto root = scratch_root();
  std::vector<std::pair<std::string, Outcome>> results;
  auto report = [&](const std::string& name, Outcome o) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    results.emplace_back(name, std::move(o));
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report("C3 metric oracles", guarded(criterion_metrics));
  report("C4 DSP correctness", guarded(criterion_dsp));
  report("C5 gradient checks", guarded(criterion_gradients));
  report("C6 thresholding properties", guarded(criterion_threshold));
  report("C7 presort contract", guarded(criterion_presort));
  report("C8 schedule and sampler", guarded(criterion_schedule_sampler));

  std::cout << "running synthetic A/B experiment (3 seeds x 2 regimes + thresholding arm)" << std::endl;
  const auto ex = run_ab(root);
  report("C1 synthetic A/B", guarded([&] { return criterion_ab(ex); }));
  report("C2 relabel precision", guarded([&] { return criterion_relabel_precision(ex); }));
  report("C10 thresholding ablation arm", guarded([&] { return criterion_threshold_arm(ex); }));
  report("C9 determinism", guarded([&] { return criterion_determinism(root); }));

  int failed = 0;
  for (const auto& [name, o] : results) failed += o.pass ? 0 : 1;
  std::cout << fmt::format("{} of {} criteria passed", results.size() - failed, results.size()) << std::endl;
  fs::remove_all(root);
  return failed ? 1 : 0;
}
