#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gravamen::eval {

// Percent-scale scores for one evaluation set.
struct Scores {
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // macro
};

struct ClassScores {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t support = 0;
};

// Labels must lie in [0, num_classes). Per-class precision or recall with a zero denominator is 0,
// and the macro average runs over all num_classes classes. Throws std::invalid_argument on a
// length mismatch, empty input or an out-of-range label.
Scores compute_metrics(std::span<const int> predictions, std::span<const int> gold, std::size_t num_classes);
std::vector<ClassScores> per_class_scores(std::span<const int> predictions, std::span<const int> gold,
                                          std::size_t num_classes);

struct Summary {
  std::vector<double> per_fold;
  double mean = 0.0;
  double std = 0.0;
};

// Population std unless `sample` is set (n - 1 denominator).
Summary summarize(std::vector<double> values, bool sample = false);

struct MetricsReport {
  Summary accuracy, precision, recall, f1;
  std::size_t folds() const { return accuracy.per_fold.size(); }
};

MetricsReport aggregate(std::span<const Scores> folds, bool sample_std = false);

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // row = gold, column = prediction
  std::size_t at(std::size_t gold, std::size_t pred) const { return counts[gold * classes + pred]; }
  std::size_t total() const;
  std::size_t trace() const;
  // Each row divided by its support; rows without support stay zero and are listed in `empty_rows`.
  std::vector<double> normalized(std::vector<std::size_t>* empty_rows = nullptr) const;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> gold, std::size_t num_classes);

}  // namespace gravamen::eval
