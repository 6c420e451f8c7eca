#include "presort/metrics.hpp"

#include <cmath>
#include <fstream>

#include "presort/error.hpp"
#include "presort/image.hpp"

namespace presort {

ConfusionMatrix::ConfusionMatrix(LabelSpace space)
    : space_(std::move(space)), counts_(space_.size() * space_.size(), 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  if (truth >= size() || predicted >= size()) throw Error("confusion: label index outside label space");
  counts_[truth * size() + predicted] += n;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t t = 0;
  for (std::size_t p = 0; p < size(); ++p) t += (*this)(truth, p);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t t = 0;
  for (std::size_t r = 0; r < size(); ++r) t += (*this)(r, predicted);
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += (*this)(i, i);
  return t;
}

ConfusionMatrix confusion(std::span<const std::string> truth, std::span<const std::string> predicted,
                          const LabelSpace& space) {
  if (truth.size() != predicted.size()) throw Error("confusion: label sequences differ in length");
  ConfusionMatrix cm(space);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(space.index_of(truth[i]), space.index_of(predicted[i]));
  return cm;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, const LabelSpace& space) {
  if (truth.size() != predicted.size()) throw Error("confusion: label sequences differ in length");
  ConfusionMatrix cm(space);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0) throw Error("confusion: negative label index");
    cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> recall(cm.size());
  for (std::size_t c = 0; c < cm.size(); ++c) {
    const auto support = cm.row_sum(c);
    if (support == 0) throw Error("uar: class '" + cm.label_space().name(c) + "' has no true samples");
    recall[c] = static_cast<double>(cm(c, c)) / static_cast<double>(support);
  }
  return recall;
}

double uar(const ConfusionMatrix& cm) {
  if (cm.size() == 0) throw Error("uar: empty label space");
  const auto recall = per_class_recall(cm);
  double sum = 0.0;
  for (double r : recall) sum += r;
  return sum / static_cast<double>(recall.size());
}

F1Result f1_binary(const ConfusionMatrix& cm, std::size_t positive) {
  if (cm.size() != 2) throw Error("f1_binary: needs a 2x2 confusion matrix");
  if (positive > 1) throw Error("f1_binary: positive index must be 0 or 1");
  const std::size_t negative = 1 - positive;
  const double tp = static_cast<double>(cm(positive, positive));
  const double fp = static_cast<double>(cm(negative, positive));
  const double fn = static_cast<double>(cm(positive, negative));
  F1Result r;
  if (tp + fp == 0.0 || tp + fn == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.precision = tp / (tp + fp);
  r.recall = tp / (tp + fn);
  if (r.precision + r.recall == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

std::vector<std::array<double, 2>> MismatchMatrix::row_percent() const {
  std::vector<std::array<double, 2>> out(counts.size(), {0.0, 0.0});
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double total = static_cast<double>(row_sum(c));
    if (total == 0.0) continue;
    out[c] = {100.0 * static_cast<double>(counts[c][0]) / total, 100.0 * static_cast<double>(counts[c][1]) / total};
  }
  return out;
}

MismatchMatrix mismatch(std::span<const int> true_labels, std::span<const int> binary_predictions,
                        const LabelSpace& space) {
  if (true_labels.size() != binary_predictions.size()) throw Error("mismatch: sequences differ in length");
  MismatchMatrix mm;
  mm.label_space = space;
  mm.counts.assign(space.size(), {0, 0});
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i];
    const int b = binary_predictions[i];
    if (t < 0 || static_cast<std::size_t>(t) >= space.size()) throw Error("mismatch: label index outside space");
    if (b != 0 && b != 1) throw Error("mismatch: binary prediction must be 0 or 1");
    ++mm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)];
  }
  return mm;
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "true\\predicted";
  for (const auto& n : cm.label_space().names()) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < cm.size(); ++r) {
    out << cm.label_space().name(r);
    for (std::size_t c = 0; c < cm.size(); ++c) out << ',' << cm(r, c);
    out << '\n';
  }
}

void write_mismatch_csv(const MismatchMatrix& mm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "true,background,primate,background_pct,primate_pct\n";
  const auto pct = mm.row_percent();
  char buf[64];
  for (std::size_t c = 0; c < mm.counts.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", pct[c][0], pct[c][1]);
    out << mm.label_space.name(c) << ',' << mm.counts[c][0] << ',' << mm.counts[c][1] << ',' << buf << '\n';
  }
}

void write_confusion_pgm(const ConfusionMatrix& cm, const std::filesystem::path& path, int cell_px) {
  const std::size_t k = cm.size();
  const auto px = static_cast<std::size_t>(cell_px);
  GrayImage img(k * px, k * px);
  for (std::size_t r = 0; r < k; ++r) {
    const double total = static_cast<double>(cm.row_sum(r));
    for (std::size_t c = 0; c < k; ++c) {
      const double frac = total > 0.0 ? static_cast<double>(cm(r, c)) / total : 0.0;
      const auto v = static_cast<std::uint8_t>(std::lround(frac * 255.0));
      for (std::size_t y = 0; y < px; ++y) {
        for (std::size_t x = 0; x < px; ++x) img.at(c * px + x, r * px + y) = v;
      }
    }
  }
  img.write_pgm(path);
}

}  // namespace presort
