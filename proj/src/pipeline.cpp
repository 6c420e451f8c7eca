#include "presort/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <thread>

#include "presort/augment.hpp"
#include "presort/error.hpp"
#include "presort/threshold.hpp"

namespace presort {

namespace {

enum Stage : std::uint64_t { kBinaryStage = 1, kMulticlassStage = 2 };

template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_geometry(const NetConfig& net, const MelSegment& seg) {
  if (static_cast<std::size_t>(net.input_height) != seg.n_mels() ||
      static_cast<std::size_t>(net.input_width) != seg.n_frames()) {
    throw Error("segment geometry " + std::to_string(seg.n_mels()) + "x" + std::to_string(seg.n_frames()) +
                " does not match model input " + std::to_string(net.input_height) + "x" +
                std::to_string(net.input_width) + "; both stages must use the same segment length");
  }
}

void fill_input(const MelSegment& seg, std::span<float> dst) {
  std::copy(seg.values.data().begin(), seg.values.data().end(), dst.begin());
  to_network_input(dst);
}

struct Dataset {
  const std::vector<MelSegment>* segments;
  std::vector<int> labels;
};

/// Shared training loop for both stages.
TrainResult fit(Network<float> net, const Dataset& train, const Dataset& val, std::size_t num_classes,
                const RunConfig& cfg, int epochs, Stage stage, std::uint64_t stream_seed) {
  if (train.segments->empty()) throw Error("training split is empty");
  if (val.segments->empty()) throw Error("validation split is empty");
  for (const auto* set : {train.segments, val.segments}) {
    for (const auto& s : *set) check_geometry(net.config(), s);
  }
  const bool binary = stage == kBinaryStage;
  const bool augmenting = !binary || cfg.augment_binary;
  const NetConfig& nc = net.config();
  const std::size_t plane = static_cast<std::size_t>(nc.input_height) * nc.input_width;

  const auto class_w = class_weights(train.labels, num_classes);
  std::vector<double> sample_w(train.labels.size());
  for (std::size_t i = 0; i < sample_w.size(); ++i) sample_w[i] = class_w[static_cast<std::size_t>(train.labels[i])];
  const std::size_t per_epoch = cfg.samples_per_epoch > 0 ? static_cast<std::size_t>(cfg.samples_per_epoch)
                                                          : train.labels.size();

  Adam<float> adam({cfg.optim.learning_rate, cfg.optim.beta1, cfg.optim.beta2, cfg.optim.epsilon});
  TrainResult result{net, {}, -1, -std::numeric_limits<double>::infinity()};
  Rng dropout_rng = make_rng(stream_seed, {stage, 0xd209});
  std::vector<float> input;
  std::vector<float> targets;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    adam.set_learning_rate(lr_schedule(epoch, cfg.optim.learning_rate, cfg.optim.lr_step_epochs, cfg.optim.lr_decay));
    Rng sampler = make_rng(stream_seed, {stage, static_cast<std::uint64_t>(epoch), 0x5a3});
    const auto order = weighted_sample(sample_w, per_epoch, sampler);
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t bsz = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
      input.assign(bsz * plane, 0.0f);
      targets.assign(bsz, 0.0f);
      batch_labels.assign(bsz, 0);
      for (std::size_t j = 0; j < bsz; ++j) {
        const std::size_t idx = order[start + j];
        const MelSegment& seg = (*train.segments)[idx];
        std::span<float> slot(input.data() + j * plane, plane);
        std::copy(seg.values.data().begin(), seg.values.data().end(), slot.begin());
        if (augmenting) {
          Rng aug = make_rng(stream_seed, {stage, static_cast<std::uint64_t>(epoch), start + j});
          augment_in_place(slot, seg.n_mels(), seg.n_frames(), cfg.augment, aug);
        }
        to_network_input(slot);
        batch_labels[j] = train.labels[idx];
        targets[j] = static_cast<float>(train.labels[idx]);
      }
      const auto probs = net.forward(input, bsz, Mode::train, &dropout_rng);
      const auto loss = binary ? bce_loss_logits<float>(probs, targets)
                               : focal_loss_logits<float>(probs, num_classes, batch_labels, cfg.optim.focal_gamma);
      if (!std::isfinite(loss.value)) {
        throw Error("training diverged (loss " + std::to_string(loss.value) + ") at epoch " + std::to_string(epoch) +
                    ", seed " + std::to_string(cfg.seed) + "\n" + to_ini(cfg));
      }
      net.zero_grad();
      net.backward(loss.grad);
      adam.step(net.tensors());
      loss_sum += loss.value;
      ++loss_batches;
    }

    // Validation.
    const auto probs = predict(net, *val.segments);
    std::vector<int> preds(val.labels.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (binary) {
        preds[i] = probs[i] >= 0.5f ? 1 : 0;
      } else {
        const float* row = probs.data() + i * num_classes;
        preds[i] = static_cast<int>(std::max_element(row, row + num_classes) - row);
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = adam.learning_rate();
    rec.train_loss = loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < num_classes; ++c) names.push_back(binary ? LabelSpace::binary().name(c) : "c" + std::to_string(c));
    const auto val_cm = confusion(val.labels, preds, LabelSpace(names));
    const auto eval = evaluate(val_cm);
    rec.val_accuracy = eval.accuracy;
    rec.val_uar = eval.uar.value_or(0.0);
    if (binary) {
      rec.val_f1 = eval.f1 ? eval.f1->f1 : 0.0;
      rec.score = rec.val_f1;
    } else {
      rec.score = eval.uar.value_or(eval.accuracy);
    }
    spdlog::info("{} epoch {:3d} lr {:.2e} loss {:.4f} val acc {:.4f} uar {:.4f}{}", binary ? "binary" : "multiclass",
                 epoch, rec.learning_rate, rec.train_loss, rec.val_accuracy, rec.val_uar,
                 binary ? fmt::format(" f1 {:.4f}", rec.val_f1) : std::string());
    result.history.push_back(rec);
    if (rec.score > result.best_score) {
      result.best_score = rec.score;
      result.best_epoch = epoch;
      result.model.assign_values(net);
    }
  }
  return result;
}

std::vector<int> label_indices(const std::vector<MelSegment>& segments, const LabelSpace& space) {
  std::vector<int> out(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) out[i] = static_cast<int>(space.index_of(segments[i].label));
  return out;
}

std::vector<int> argmax_rows(const std::vector<float>& probs, std::size_t k) {
  std::vector<int> out(probs.size() / k);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float* row = probs.data() + i * k;
    out[i] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

std::string timestamp_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void to_network_input(std::span<float> db) {
  if (db.empty()) return;
  const float peak = *std::max_element(db.begin(), db.end());
  for (auto& x : db) x = std::max(x - peak, kDbFloor) / 40.0f + 1.0f;
}

const std::vector<MelSegment>& PreparedData::at(Split s) const {
  auto it = splits.find(s);
  if (it == splits.end()) throw Error("no segments for split " + std::string(to_string(s)));
  return it->second;
}

PreparedData prepare_segments(const Manifest& manifest, const RunConfig& cfg, std::optional<EventTable> events) {
  if (!manifest.has_splits()) throw Error("manifest has no split assignment");
  const MelFrontEnd frontend(cfg.spectro);
  std::vector<std::vector<MelSegment>> per_clip(manifest.records.size());
  parallel_for(manifest.records.size(), cfg.workers, [&](std::size_t i) {
    const auto& rec = manifest.records[i];
    AudioClip clip = decode_wav(manifest.resolve(rec), cfg.spectro.sample_rate);
    clip.clip_id = rec.clip_id;
    clip.label = rec.label;
    per_clip[i] = segment(frontend(clip), rec.label, cfg.segment.length_s, cfg.segment.pad_last);
  });

  PreparedData data;
  data.label_space = manifest.label_space;
  data.events = std::move(events);
  for (Split s : kAllSplits) data.splits[s];
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const Split s = manifest.split_assignment.at(manifest.records[i].clip_id);
    auto& dst = data.splits[s];
    std::move(per_clip[i].begin(), per_clip[i].end(), std::back_inserter(dst));
  }
  return data;
}

std::vector<MelSegment> threshold_segments(const std::vector<MelSegment>& segments, const RunConfig& cfg) {
  const int width = threshold_window_frames(cfg.threshold.window_s, cfg.spectro.sample_rate, cfg.spectro.hop);
  std::vector<MelSegment> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(apply_threshold(s, width, cfg.threshold.threshold).segment);
  return out;
}

BinarizedSet binarize_labels(const std::vector<MelSegment>& segments, const LabelSpace& space) {
  if (!space.has_background()) throw Error("binarize_labels: label space has no background class");
  BinarizedSet out;
  out.segments = segments;
  out.original_labels.reserve(segments.size());
  for (auto& s : out.segments) {
    space.index_of(s.label);
    out.original_labels.push_back(s.label);
    s.label = s.label == kBackground ? std::string(kBackground) : std::string(kPrimate);
  }
  return out;
}

std::pair<double, double> segment_span(const MelSegment& seg, int hop, int sample_rate) {
  const double frame_s = static_cast<double>(hop) / sample_rate;
  return {seg.start_s, seg.start_s + static_cast<double>(seg.valid_frames()) * frame_s};
}

std::string oracle_label(const MelSegment& seg, const EventTable& events, int hop, int sample_rate) {
  auto it = events.find(seg.clip_id);
  if (it == events.end()) throw Error("no ground-truth interval for clip " + seg.clip_id);
  const auto [begin, end] = segment_span(seg, hop, sample_rate);
  return it->second.overlap(begin, end) > 0.0 ? seg.label : std::string(kBackground);
}

std::vector<float> predict(Network<float>& net, const std::vector<MelSegment>& segments, std::size_t batch) {
  const NetConfig& nc = net.config();
  const std::size_t plane = static_cast<std::size_t>(nc.input_height) * nc.input_width;
  std::vector<float> out;
  out.reserve(segments.size() * static_cast<std::size_t>(nc.outputs()));
  std::vector<float> input;
  for (std::size_t start = 0; start < segments.size(); start += batch) {
    const std::size_t n = std::min(batch, segments.size() - start);
    input.resize(n * plane);
    for (std::size_t j = 0; j < n; ++j) {
      check_geometry(nc, segments[start + j]);
      fill_input(segments[start + j], std::span<float>(input.data() + j * plane, plane));
    }
    const auto probs = net.forward(input, n, Mode::eval);
    out.insert(out.end(), probs.begin(), probs.end());
  }
  return out;
}

TrainResult train_binary(const BinarizedSet& train, const BinarizedSet& val, const RunConfig& cfg,
                         std::uint64_t model_seed) {
  const auto space = LabelSpace::binary();
  Network<float> net(binary_variant(cfg.network_geometry()), derive_seed(model_seed, {kBinaryStage}));
  return fit(std::move(net), {&train.segments, label_indices(train.segments, space)},
             {&val.segments, label_indices(val.segments, space)}, 2, cfg, cfg.epochs_binary, kBinaryStage, model_seed);
}

TrainResult train_multiclass(const std::vector<MelSegment>& train, const std::vector<MelSegment>& val,
                             const LabelSpace& space, const RunConfig& cfg, const Network<float>* init) {
  Network<float> net(multiclass_variant(cfg.network_geometry(), static_cast<int>(space.size())),
                     derive_seed(cfg.seed, {kMulticlassStage}));
  if (init != nullptr) {
    const auto copied = net.copy_body_from(*init);
    spdlog::info("warm start: copied {} tensors from the binary model", copied.size());
  }
  return fit(std::move(net), {&train, label_indices(train, space)}, {&val, label_indices(val, space)}, space.size(),
             cfg, cfg.epochs_multiclass, kMulticlassStage, cfg.seed);
}

PresortResult presort(std::span<Network<float>* const> models, const std::vector<MelSegment>& segments, double tau,
                      const std::vector<MelSegment>* model_inputs) {
  if (models.empty()) throw Error("presort: no binary model");
  const auto& inputs = model_inputs ? *model_inputs : segments;
  if (inputs.size() != segments.size()) throw Error("presort: model inputs are not parallel to segments");
  std::vector<std::vector<float>> p_primate;
  for (auto* m : models) {
    if (m->config().head != HeadKind::sigmoid) throw Error("presort: model must have a binary (sigmoid) head");
    p_primate.push_back(predict(*m, inputs));
  }

  PresortResult out;
  out.segments = segments;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto& seg = out.segments[i];
    if (seg.label == kBackground) continue;
    std::size_t confident = 0;
    double mean_bg = 0.0;
    for (const auto& p : p_primate) {
      const double bg = 1.0 - static_cast<double>(p[i]);
      mean_bg += bg;
      if (bg >= tau) ++confident;
    }
    mean_bg /= static_cast<double>(p_primate.size());
    if (2 * confident > p_primate.size()) {
      out.records.push_back({seg.clip_id, seg.segment_index, seg.label, std::string(kBackground), mean_bg});
      seg.label = std::string(kBackground);
    }
  }
  return out;
}

PresortResult presort(Network<float>& model, const std::vector<MelSegment>& segments, double tau,
                      const std::vector<MelSegment>* model_inputs) {
  Network<float>* models[] = {&model};
  return presort(std::span<Network<float>* const>(models), segments, tau, model_inputs);
}

Evaluation evaluate(const ConfusionMatrix& cm) {
  Evaluation e;
  e.confusion = cm;
  e.accuracy = cm.total() ? accuracy(cm) : 0.0;
  e.recall.resize(cm.size(), 0.0);
  bool all_supported = cm.size() > 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    const auto support = cm.row_sum(c);
    if (support == 0) {
      all_supported = false;
      continue;
    }
    e.recall[c] = static_cast<double>(cm(c, c)) / static_cast<double>(support);
  }
  if (all_supported) e.uar = uar(cm);
  if (cm.size() == 2) e.f1 = f1_binary(cm);
  return e;
}

ExperimentReport run_experiment(Regime regime, const RunConfig& cfg, const PreparedData& data) {
  const auto t0 = std::chrono::steady_clock::now();
  const LabelSpace& space = data.label_space;
  const int hop = cfg.spectro.hop, sr = cfg.spectro.sample_rate;
  const auto& train = data.at(Split::train);
  const auto& val = data.at(Split::val);
  const auto& test = data.at(Split::test);

  ExperimentReport report;
  auto& j = report.json;
  j["regime"] = std::string(to_string(regime));
  j["seed"] = cfg.seed;
  j["label_space"] = space.names();
  j["segments"] = {{"train", train.size()}, {"val", val.size()}, {"test", test.size()}};

  std::vector<MelSegment> mc_train = train, mc_val = val;
  std::optional<std::vector<MelSegment>> presorted_test;
  std::vector<Network<float>> binaries;

  if (regime != Regime::baseline) {
    const bool thresholding = regime == Regime::presort_threshold;
    auto view = [&](const std::vector<MelSegment>& s) { return thresholding ? threshold_segments(s, cfg) : s; };
    const auto bin_train = binarize_labels(view(train), space);
    const auto bin_val = binarize_labels(view(val), space);

    nlohmann::json binary_json = nlohmann::json::array();
    for (int v = 0; v < cfg.presort_votes; ++v) {
      const std::uint64_t model_seed = v == 0 ? cfg.seed : derive_seed(cfg.seed, {0x707e, static_cast<std::uint64_t>(v)});
      auto trained = train_binary(bin_train, bin_val, cfg, model_seed);
      nlohmann::json bj;
      bj["best_epoch"] = trained.best_epoch;
      bj["best_val_f1"] = trained.best_score;
      bj["history"] = nlohmann::json::array();
      for (const auto& r : trained.history) {
        bj["history"].push_back({{"epoch", r.epoch}, {"lr", r.learning_rate}, {"loss", r.train_loss},
                                 {"val_accuracy", r.val_accuracy}, {"val_uar", r.val_uar}, {"val_f1", r.val_f1}});
      }
      binary_json.push_back(bj);
      binaries.push_back(trained.model);
      if (v == 0) report.binary = std::move(trained);
    }
    j["binary"] = binary_json;

    // Validation diagnostics of the (first) binary model.
    const auto probs = predict(binaries.front(), bin_val.segments);
    std::vector<int> bin_pred(probs.size()), truth(probs.size()), bin_truth(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      bin_pred[i] = probs[i] >= 0.5f ? 1 : 0;
      truth[i] = static_cast<int>(space.index_of(bin_val.original_labels[i]));
      bin_truth[i] = bin_val.segments[i].label == kBackground ? 0 : 1;
    }
    report.binary_mismatch = presort::mismatch(truth, bin_pred, space);
    j["binary_val"] = to_json(evaluate(confusion(bin_truth, bin_pred, LabelSpace::binary())));
    nlohmann::json mm = nlohmann::json::object();
    const auto pct = report.binary_mismatch->row_percent();
    for (std::size_t c = 0; c < space.size(); ++c) {
      mm[space.name(c)] = {{"background", report.binary_mismatch->counts[c][0]},
                           {"primate", report.binary_mismatch->counts[c][1]},
                           {"background_pct", pct[c][0]},
                           {"primate_pct", pct[c][1]}};
    }
    j["binary_val_mismatch"] = mm;

    std::vector<Network<float>*> model_ptrs;
    for (auto& b : binaries) model_ptrs.push_back(&b);
    nlohmann::json relabel = nlohmann::json::object();
    relabel["tau"] = cfg.relabel_threshold;
    relabel["votes"] = cfg.presort_votes;
    auto relabel_split = [&](const std::vector<MelSegment>& segs, const char* name) {
      std::optional<std::vector<MelSegment>> inputs;
      if (thresholding) inputs = threshold_segments(segs, cfg);
      auto res = presort(model_ptrs, segs, cfg.relabel_threshold, inputs ? &*inputs : nullptr);
      nlohmann::json s;
      s["flipped"] = res.records.size();
      nlohmann::json per_class = nlohmann::json::object();
      for (std::size_t c = 0; c < space.size(); ++c) {
        if (space.name(c) == kBackground) continue;
        const auto total = std::count_if(segs.begin(), segs.end(), [&](const auto& x) { return x.label == space.name(c); });
        const auto flipped = std::count_if(res.records.begin(), res.records.end(),
                                           [&](const auto& r) { return r.old_label == space.name(c); });
        per_class[space.name(c)] = {{"segments", total},
                                    {"flipped", flipped},
                                    {"fraction", total ? static_cast<double>(flipped) / static_cast<double>(total) : 0.0}};
      }
      s["per_class"] = per_class;
      if (data.events) {
        std::size_t genuine = 0;
        std::map<std::string, const MelSegment*> by_key;
        for (const auto& x : segs) by_key[x.clip_id + "#" + std::to_string(x.segment_index)] = &x;
        for (const auto& r : res.records) {
          const auto* seg = by_key.at(r.clip_id + "#" + std::to_string(r.segment_index));
          const auto [b, e] = segment_span(*seg, hop, sr);
          if (data.events->at(r.clip_id).overlap(b, e) <= 0.0) ++genuine;
        }
        s["zero_overlap"] = genuine;
        s["precision"] = res.records.empty() ? 1.0 : static_cast<double>(genuine) / static_cast<double>(res.records.size());
      }
      relabel[name] = s;
      return res;
    };
    auto train_res = relabel_split(train, "train");
    auto val_res = relabel_split(val, "val");
    auto test_res = relabel_split(test, "test");
    report.relabels = train_res.records;
    mc_train = std::move(train_res.segments);
    mc_val = std::move(val_res.segments);
    presorted_test = std::move(test_res.segments);
    j["relabel"] = relabel;
  }

  const bool warm = regime != Regime::baseline && cfg.warm_start;
  auto mc = train_multiclass(mc_train, mc_val, space, cfg, warm ? &binaries.front() : nullptr);
  nlohmann::json mj;
  mj["warm_start"] = warm;
  mj["best_epoch"] = mc.best_epoch;
  mj["best_val_uar"] = mc.best_score;
  mj["history"] = nlohmann::json::array();
  for (const auto& r : mc.history) {
    mj["history"].push_back({{"epoch", r.epoch}, {"lr", r.learning_rate}, {"loss", r.train_loss},
                             {"val_accuracy", r.val_accuracy}, {"val_uar", r.val_uar}});
  }
  j["multiclass"] = mj;

  // Test evaluation under every available label view.
  const auto probs = predict(mc.model, test);
  const auto preds = argmax_rows(probs, space.size());
  nlohmann::json tj = nlohmann::json::object();
  auto add_view = [&](const std::string& name, const std::vector<int>& truth) {
    auto cm = confusion(truth, preds, space);
    tj[name] = to_json(evaluate(cm));
    report.test_confusions.emplace(name, std::move(cm));
  };
  add_view("weak", label_indices(test, space));
  if (data.events) {
    std::vector<int> truth(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      truth[i] = static_cast<int>(space.index_of(oracle_label(test[i], *data.events, hop, sr)));
    }
    add_view("oracle", truth);
  }
  if (presorted_test) add_view("presorted", label_indices(*presorted_test, space));

  // Clip level: majority vote over segment predictions, ties broken by summed probability.
  {
    std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> votes;
    std::map<std::string, int> clip_truth;
    for (std::size_t i = 0; i < test.size(); ++i) {
      auto& [prob_sum, count] = votes[test[i].clip_id];
      if (prob_sum.empty()) prob_sum.assign(space.size(), 0.0), count.assign(space.size(), 0);
      ++count[static_cast<std::size_t>(preds[i])];
      for (std::size_t c = 0; c < space.size(); ++c) prob_sum[c] += probs[i * space.size() + c];
      clip_truth[test[i].clip_id] = static_cast<int>(space.index_of(test[i].label));
    }
    ConfusionMatrix cm(space);
    for (const auto& [clip, v] : votes) {
      const auto& [prob_sum, count] = v;
      std::size_t best = 0;
      for (std::size_t c = 1; c < space.size(); ++c) {
        if (count[c] > count[best] || (count[c] == count[best] && prob_sum[c] > prob_sum[best])) best = c;
      }
      cm.add(static_cast<std::size_t>(clip_truth.at(clip)), best);
    }
    tj["clip_majority"] = to_json(evaluate(cm));
    report.test_confusions.emplace("clip_majority", std::move(cm));
  }
  j["test"] = tj;
  const std::string headline = data.events ? "oracle" : "weak";
  j["headline"] = {{"label_view", headline},
                   {"accuracy", tj[headline]["accuracy"]},
                   {"uar", tj[headline]["uar"]}};
  j["config"] = to_json(cfg);
  j["config"]["run"].erase("workers");
  j["host"] = {{"workers", cfg.workers}};
  j["timestamp"] = timestamp_now();
  j["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.multiclass = std::move(mc);
  return report;
}

}  // namespace presort
