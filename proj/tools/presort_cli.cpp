#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "presort/checkpoint.hpp"
#include "presort/config.hpp"
#include "presort/corpus.hpp"
#include "presort/error.hpp"
#include "presort/pipeline.hpp"
#include "presort/synth.hpp"
#include "presort/threshold.hpp"

namespace fs = std::filesystem;
using namespace presort;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> regime;
  std::optional<double> tau;
  bool thresholding = false;
  std::optional<double> segment_length;
  std::optional<int> epochs;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "configuration file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->required();
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--workers", c.workers, "preprocessing threads");
  cmd->add_option("--regime", c.regime, "baseline | presort | presort+threshold");
  cmd->add_option("--tau", c.tau, "relabel threshold on p(background)");
  cmd->add_flag("--thresholding", c.thresholding, "enable local adaptive thresholding");
  cmd->add_option("--segment-length", c.segment_length, "segment length in seconds");
  cmd->add_option("--epochs", c.epochs, "epochs for both training stages");
  cmd->add_option("--set", c.overrides, "section.key=value override")->take_all();
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = load_run_config(c.config);
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like section.key=value: " + o);
    apply_override(cfg, o.substr(0, eq), o.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  if (c.regime) cfg.regime = parse_regime(*c.regime);
  if (c.tau) cfg.relabel_threshold = *c.tau;
  if (c.thresholding) cfg.thresholding_enabled = true;
  if (c.segment_length) cfg.segment.length_s = *c.segment_length;
  if (c.epochs) cfg.epochs_binary = cfg.epochs_multiclass = *c.epochs;
  cfg.validate();
  fs::create_directories(c.out);
  std::ofstream(fs::path(c.out) / "config.ini") << to_ini(cfg);
  return cfg;
}

Manifest load_split_manifest(const fs::path& path, const RunConfig& cfg) {
  Manifest m = load_manifest(path);
  if (!m.has_splits()) m = split(m, cfg.split_ratio, cfg.seed);
  return m;
}

std::optional<EventTable> find_events(const std::string& explicit_path, const fs::path& near) {
  if (!explicit_path.empty()) return load_events(explicit_path);
  const auto guess = near / "events.csv";
  if (fs::exists(guess)) return load_events(guess);
  return std::nullopt;
}

void write_labels(const LabelSpace& space, const fs::path& path) {
  std::ofstream out(path);
  for (const auto& n : space.names()) out << n << '\n';
}

LabelSpace read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing label list " + path.string());
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) names.push_back(line);
  }
  return LabelSpace(names);
}

/// Segment stores written by `preprocess` (or `presort`).
PreparedData load_data(const fs::path& dir, bool thresholded) {
  const fs::path stores = dir / (thresholded ? "segments_thresholded" : "segments");
  if (!fs::exists(stores)) throw Error("no segment stores in " + stores.string());
  PreparedData data;
  data.label_space = read_labels(dir / "labels.txt");
  for (Split s : kAllSplits) data.splits[s] = read_segment_store(stores / std::string(to_string(s)));
  if (fs::exists(dir / "events.csv")) data.events = load_events(dir / "events.csv");
  return data;
}

void save_data(const PreparedData& data, const fs::path& dir, const std::string& sub) {
  fs::create_directories(dir / sub);
  for (const auto& [s, segs] : data.splits) write_segment_store(segs, dir / sub / std::string(to_string(s)));
  write_labels(data.label_space, dir / "labels.txt");
  if (data.events) save_events(*data.events, dir / "events.csv");
}

void print_evaluation(const std::string& title, const Evaluation& e) {
  std::printf("%-14s accuracy %.4f  uar %s", title.c_str(), e.accuracy,
              e.uar ? std::to_string(*e.uar).c_str() : "n/a");
  if (e.f1) std::printf("  f1 %.4f", e.f1->f1);
  std::printf("\n");
}

int cmd_synth(const Common& c) {
  const RunConfig cfg = resolve(c);
  auto corpus = generate_synthetic_corpus(cfg.synth, cfg.seed, c.out);
  auto m = split(corpus.manifest, cfg.split_ratio, cfg.seed);
  save_manifest(m, fs::path(c.out) / "manifest.csv");
  spdlog::info("wrote {} clips to {}", m.records.size(), c.out);
  return 0;
}

int cmd_preprocess(const Common& c, const std::string& manifest_path, const std::string& events_path) {
  const RunConfig cfg = resolve(c);
  const Manifest m = load_split_manifest(manifest_path, cfg);
  auto data = prepare_segments(m, cfg, find_events(events_path, fs::path(manifest_path).parent_path()));
  save_data(data, c.out, "segments");
  if (cfg.thresholding_enabled) {
    PreparedData th = data;
    for (auto& [s, segs] : th.splits) segs = threshold_segments(segs, cfg);
    save_data(th, c.out, "segments_thresholded");
  }
  for (const auto& [s, segs] : data.splits) spdlog::info("{}: {} segments", to_string(s), segs.size());
  return 0;
}

int cmd_train_binary(const Common& c, const std::string& data_dir) {
  const RunConfig cfg = resolve(c);
  const auto data = load_data(data_dir, cfg.thresholding_enabled);
  auto result = train_binary(binarize_labels(data.at(Split::train), data.label_space),
                             binarize_labels(data.at(Split::val), data.label_space), cfg, cfg.seed);
  save_checkpoint(result.model, fs::path(c.out) / "binary.ckpt");
  std::printf("best epoch %d, validation F1 %.4f\n", result.best_epoch, result.best_score);
  return 0;
}

int cmd_presort(const Common& c, const std::string& data_dir, const std::string& checkpoint) {
  const RunConfig cfg = resolve(c);
  auto data = load_data(data_dir, false);
  std::optional<PreparedData> th;
  if (cfg.thresholding_enabled) th = load_data(data_dir, true);
  auto model = load_checkpoint(checkpoint);
  std::vector<RelabelRecord> all;
  for (auto& [s, segs] : data.splits) {
    auto res = presort::presort(model, segs, cfg.relabel_threshold, th ? &th->at(s) : nullptr);
    write_relabel_csv(res.records, fs::path(c.out) / ("relabels_" + std::string(to_string(s)) + ".csv"));
    std::printf("%-5s flipped %zu of %zu segments\n", std::string(to_string(s)).c_str(), res.records.size(),
                segs.size());
    all.insert(all.end(), res.records.begin(), res.records.end());
    segs = std::move(res.segments);
  }
  write_relabel_csv(all, fs::path(c.out) / "relabels.csv");
  save_data(data, c.out, "segments");
  return 0;
}

int cmd_train_multiclass(const Common& c, const std::string& data_dir, const std::string& init) {
  const RunConfig cfg = resolve(c);
  const auto data = load_data(data_dir, false);
  std::optional<Network<float>> warm;
  if (!init.empty()) warm = load_checkpoint(init);
  auto result = train_multiclass(data.at(Split::train), data.at(Split::val), data.label_space, cfg,
                                 warm ? &*warm : nullptr);
  save_checkpoint(result.model, fs::path(c.out) / "multiclass.ckpt");
  std::printf("best epoch %d, validation UAR %.4f\n", result.best_epoch, result.best_score);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& data_dir, const std::string& checkpoint,
                 const std::string& split_name) {
  const RunConfig cfg = resolve(c);
  const auto data = load_data(data_dir, false);
  auto model = load_checkpoint(checkpoint);
  const auto& segs = data.at(parse_split(split_name));
  const auto& space = data.label_space;
  const bool binary = model.config().head == HeadKind::sigmoid;
  const LabelSpace out_space = binary ? LabelSpace::binary() : space;
  const auto probs = predict(model, segs);
  const std::size_t k = static_cast<std::size_t>(model.config().outputs());
  std::vector<int> pred(segs.size()), truth(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (binary) {
      pred[i] = probs[i] >= 0.5f ? 1 : 0;
      truth[i] = segs[i].label == kBackground ? 0 : 1;
    } else {
      const float* row = probs.data() + i * k;
      pred[i] = static_cast<int>(std::max_element(row, row + k) - row);
      truth[i] = static_cast<int>(space.index_of(segs[i].label));
    }
  }
  nlohmann::json j;
  const fs::path out(c.out);
  auto emit = [&](const std::string& view, const std::vector<int>& t) {
    const auto e = evaluate(confusion(t, pred, out_space));
    print_evaluation(view, e);
    j[view] = to_json(e);
    write_confusion_csv(e.confusion, out / ("confusion_" + view + ".csv"));
    write_confusion_pgm(e.confusion, out / ("confusion_" + view + ".pgm"));
  };
  emit("weak", truth);
  if (data.events && !binary) {
    std::vector<int> oracle(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) {
      oracle[i] = static_cast<int>(
          space.index_of(oracle_label(segs[i], *data.events, cfg.spectro.hop, cfg.spectro.sample_rate)));
    }
    emit("oracle", oracle);
  }
  if (binary) {
    std::vector<int> multi(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) multi[i] = static_cast<int>(space.index_of(segs[i].label));
    write_mismatch_csv(presort::mismatch(multi, pred, space), out / "mismatch.csv");
  }
  std::ofstream(out / "metrics.json") << j.dump(2) << '\n';
  return 0;
}

int cmd_run(const Common& c, const std::string& manifest_path, const std::string& events_path) {
  RunConfig cfg = resolve(c);
  Regime regime = cfg.regime;
  if (cfg.thresholding_enabled && regime == Regime::presort) regime = Regime::presort_threshold;
  const Manifest m = load_split_manifest(manifest_path, cfg);
  const auto data = prepare_segments(m, cfg, find_events(events_path, fs::path(manifest_path).parent_path()));
  const auto report = run_experiment(regime, cfg, data);
  write_report(report, cfg, c.out);
  for (const auto& [view, cm] : report.test_confusions) print_evaluation(view, evaluate(cm));
  return 0;
}

int cmd_sweep(const Common& c, const std::string& data_dir, const std::vector<double>& windows,
              const std::vector<double>& thresholds, const std::string& split_name) {
  const RunConfig cfg = resolve(c);
  const auto data = load_data(data_dir, false);
  const auto rows = sweep_report(data.at(parse_split(split_name)), windows, thresholds, cfg.spectro.sample_rate,
                                 cfg.spectro.hop);
  std::ofstream out(fs::path(c.out) / "threshold_sweep.csv");
  out << "window_s,threshold,label,segments,mean_blackened_fraction\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.3f,%.3f,%s,%zu,%.6f\n", r.window_s, r.threshold, r.label.c_str(), r.segments,
                  r.mean_blackened_fraction);
    out << buf;
    std::fputs(buf, stdout);
  }
  return 0;
}

void configure_logging() {
  auto level = spdlog::level::info;
  if (const char* env = std::getenv("PRESORT_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Binary presorting and relabeling for weakly labeled audio classification"};
  app.require_subcommand(1);

  Common c;
  std::string manifest, events, data_dir, checkpoint, init, split_name = "test";
  std::vector<double> windows{0.2, 0.4, 0.7}, thresholds{0.1, 0.3, 0.5};

  auto* synth = app.add_subcommand("synth", "generate a synthetic weakly labeled corpus");
  auto* prep = app.add_subcommand("preprocess", "decode, mel-transform and segment a manifest");
  auto* tb = app.add_subcommand("train-binary", "train the background-vs-primate model");
  auto* ps = app.add_subcommand("presort", "relabel segments with a binary model");
  auto* tm = app.add_subcommand("train-multiclass", "train the multi-class model");
  auto* ev = app.add_subcommand("evaluate", "metrics of a checkpoint on one split");
  auto* run = app.add_subcommand("run", "full pipeline for one regime");
  auto* sw = app.add_subcommand("threshold-sweep", "blackened fraction per window, threshold and label");
  for (auto* cmd : {synth, prep, tb, ps, tm, ev, run, sw}) add_common(cmd, c);

  for (auto* cmd : {prep, run}) {
    cmd->add_option("--manifest", manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--events", events, "ground-truth event CSV");
  }
  for (auto* cmd : {tb, ps, tm, ev, sw}) {
    cmd->add_option("--data", data_dir, "preprocess output directory")->required()->check(CLI::ExistingDirectory);
  }
  for (auto* cmd : {ps, ev}) {
    cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  }
  tm->add_option("--init", init, "binary checkpoint for warm start")->check(CLI::ExistingFile);
  for (auto* cmd : {ev, sw}) cmd->add_option("--split", split_name, "train | val | test");
  sw->add_option("--windows", windows, "window lengths in seconds");
  sw->add_option("--thresholds", thresholds, "thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n";
    auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 2;
  }

  try {
    if (*synth) return cmd_synth(c);
    if (*prep) return cmd_preprocess(c, manifest, events);
    if (*tb) return cmd_train_binary(c, data_dir);
    if (*ps) return cmd_presort(c, data_dir, checkpoint);
    if (*tm) return cmd_train_multiclass(c, data_dir, init);
    if (*ev) return cmd_evaluate(c, data_dir, checkpoint, split_name);
    if (*run) return cmd_run(c, manifest, events);
    if (*sw) return cmd_sweep(c, data_dir, windows, thresholds, split_name);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
