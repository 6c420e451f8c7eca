#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "presort/config.hpp"
#include "presort/corpus.hpp"
#include "presort/metrics.hpp"
#include "presort/net.hpp"
#include "presort/segmenter.hpp"

namespace presort {

/// Segments of every split, labels inherited from their clips.
struct PreparedData {
  LabelSpace label_space;
  std::map<Split, std::vector<MelSegment>> splits;
  std::optional<EventTable> events;  // ground truth, synthetic corpora only

  const std::vector<MelSegment>& at(Split s) const;
};

/// Decode, mel-transform and segment every clip of a split manifest. Work is
/// spread over cfg.workers threads; the result does not depend on that count.
PreparedData prepare_segments(const Manifest& manifest, const RunConfig& cfg,
                              std::optional<EventTable> events = std::nullopt);

/// Thresholded copies (binary-stage data path only).
std::vector<MelSegment> threshold_segments(const std::vector<MelSegment>& segments, const RunConfig& cfg);

struct BinarizedSet {
  std::vector<MelSegment> segments;         // labels in {background, primate}
  std::vector<std::string> original_labels; // parallel to segments
};

/// background -> background, every other class -> primate.
BinarizedSet binarize_labels(const std::vector<MelSegment>& segments, const LabelSpace& space);

/// Label a segment would carry if its clip label were applied only where the
/// ground-truth event overlaps it.
std::string oracle_label(const MelSegment& seg, const EventTable& events, int hop, int sample_rate);

/// Time span [start, end) of the unpadded part of a segment.
std::pair<double, double> segment_span(const MelSegment& seg, int hop, int sample_rate);

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double val_uar = 0.0;
  double val_f1 = 0.0;  // binary stage only
  double score = 0.0;   // model-selection score (F1 binary, UAR multi-class)
};

struct TrainResult {
  Network<float> model;  // best epoch
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_score = 0.0;
};

/// Network input for one segment, in place: dB values are re-referenced to the
/// segment's own maximum (floored at -80) and mapped from [-80, 0] to [-1, 1].
void to_network_input(std::span<float> db);

/// Eval-mode probabilities for every segment, in order.
std::vector<float> predict(Network<float>& net, const std::vector<MelSegment>& segments, std::size_t batch = 64);

/// Binary stage: sigmoid head, BCE, no batchnorm/dropout, best epoch by validation F1.
TrainResult train_binary(const BinarizedSet& train, const BinarizedSet& val, const RunConfig& cfg,
                         std::uint64_t model_seed);

/// Multi-class stage: softmax head, focal loss, best epoch by validation UAR.
/// With `init`, every non-head tensor with a matching shape is copied from it.
TrainResult train_multiclass(const std::vector<MelSegment>& train, const std::vector<MelSegment>& val,
                             const LabelSpace& space, const RunConfig& cfg, const Network<float>* init);

struct RelabelRecord {
  std::string clip_id;
  int segment_index = 0;
  std::string old_label;
  std::string new_label;
  double background_probability = 0.0;
};

struct PresortResult {
  std::vector<MelSegment> segments;  // labels after relabeling
  std::vector<RelabelRecord> records;
};

/// A primate-labeled segment becomes background when p(background) >= tau
/// (with several models: when a strict majority of them says so). Background
/// segments never change. `model_inputs`, when given, is what the models see
/// (e.g. thresholded copies) and must be parallel to `segments`.
PresortResult presort(std::span<Network<float>* const> models, const std::vector<MelSegment>& segments, double tau,
                      const std::vector<MelSegment>* model_inputs = nullptr);
PresortResult presort(Network<float>& model, const std::vector<MelSegment>& segments, double tau,
                      const std::vector<MelSegment>* model_inputs = nullptr);

void write_relabel_csv(const std::vector<RelabelRecord>& records, const std::filesystem::path& path);

struct Evaluation {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::optional<double> uar;  // absent when some class has no true samples
  std::vector<double> recall; // per class; NaN-free, 0 for classes without support
  std::optional<F1Result> f1; // binary matrices only
};

Evaluation evaluate(const ConfusionMatrix& cm);
nlohmann::json to_json(const Evaluation& e);

struct ExperimentReport {
  nlohmann::json json;  // full report; only "timestamp", "wall_clock_s" and "host" vary between runs
  std::vector<RelabelRecord> relabels;
  std::map<std::string, ConfusionMatrix> test_confusions;  // by label view
  std::optional<MismatchMatrix> binary_mismatch;           // validation split
  std::optional<TrainResult> binary;
  std::optional<TrainResult> multiclass;
};

/// Full pipeline for one regime.
ExperimentReport run_experiment(Regime regime, const RunConfig& cfg, const PreparedData& data);

/// report.json, relabels.csv, confusion_<view>.csv/.pgm, mismatch.csv, config.ini.
void write_report(const ExperimentReport& report, const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Copy of a report without the fields that legitimately vary between identical
/// runs ("timestamp", "wall_clock_s", "host"), for determinism checks.
nlohmann::json strip_timing(nlohmann::json report);

}  // namespace presort
