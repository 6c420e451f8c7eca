#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "presort/label_space.hpp"

namespace presort {

/// counts(true, predicted); rows are true labels, columns predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(LabelSpace space);

  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);

  std::uint64_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * size() + predicted];
  }
  std::size_t size() const { return space_.size(); }
  const LabelSpace& label_space() const { return space_; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t predicted) const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  LabelSpace space_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::string> truth, std::span<const std::string> predicted,
                          const LabelSpace& space);
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, const LabelSpace& space);

/// trace / total.
double accuracy(const ConfusionMatrix& cm);
/// TP_n / (TP_n + FN_n) for every class; throws naming a class without true samples.
std::vector<double> per_class_recall(const ConfusionMatrix& cm);
/// Unweighted mean of the per-class recalls.
double uar(const ConfusionMatrix& cm);

struct F1Result {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool degenerate = false;  // precision or recall undefined; f1 reported as 0
};

/// F1 of `positive` (default index 1, i.e. `primate` in the binary space) on a 2x2 matrix.
F1Result f1_binary(const ConfusionMatrix& cm, std::size_t positive = 1);

/// Per true multi-class label: how many samples a binary model called
/// background (column 0) vs primate (column 1).
struct MismatchMatrix {
  LabelSpace label_space;
  std::vector<std::array<std::uint64_t, 2>> counts;

  std::uint64_t row_sum(std::size_t c) const { return counts[c][0] + counts[c][1]; }
  /// Row-normalized percentages; rows without samples are all zero.
  std::vector<std::array<double, 2>> row_percent() const;
};

/// `binary_predictions` holds 0 (background) or 1 (primate).
MismatchMatrix mismatch(std::span<const int> true_labels, std::span<const int> binary_predictions,
                        const LabelSpace& space);

/// CSV with a header row and first column of label names.
void write_confusion_csv(const ConfusionMatrix& cm, const std::filesystem::path& path);
/// Raw counts and row percentages side by side.
void write_mismatch_csv(const MismatchMatrix& mm, const std::filesystem::path& path);
/// Row-normalized heatmap, one square block per cell.
void write_confusion_pgm(const ConfusionMatrix& cm, const std::filesystem::path& path, int cell_px = 24);

}  // namespace presort
