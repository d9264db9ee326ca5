#include "gravamen/eval/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gravamen::eval {

namespace {

void check_labels(std::span<const int> predictions, std::span<const int> gold, std::size_t num_classes) {
  if (predictions.size() != gold.size()) {
    throw std::invalid_argument("predictions and gold differ in length (" + std::to_string(predictions.size()) +
                                " vs " + std::to_string(gold.size()) + ")");
  }
  if (gold.empty()) throw std::invalid_argument("no items to score");
  if (num_classes == 0) throw std::invalid_argument("label schema has no classes");
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (int v : {predictions[i], gold[i]}) {
      if (v < 0 || static_cast<std::size_t>(v) >= num_classes) {
        throw std::invalid_argument("label " + std::to_string(v) + " outside the " + std::to_string(num_classes) +
                                    "-class schema");
      }
    }
  }
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<ClassScores> per_class_scores(std::span<const int> predictions, std::span<const int> gold,
                                          std::size_t num_classes) {
  const auto cm = confusion(predictions, gold, num_classes);
  std::vector<ClassScores> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      predicted += cm.at(k, c);
      actual += cm.at(c, k);
    }
    auto& s = out[c];
    s.support = actual;
    s.precision = ratio(cm.at(c, c), predicted);
    s.recall = ratio(cm.at(c, c), actual);
    s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return out;
}

Scores compute_metrics(std::span<const int> predictions, std::span<const int> gold, std::size_t num_classes) {
  const auto classes = per_class_scores(predictions, gold, num_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += predictions[i] == gold[i];
  Scores s;
  s.accuracy = 100.0 * ratio(correct, gold.size());
  for (const auto& c : classes) {
    s.precision += c.precision;
    s.recall += c.recall;
    s.f1 += c.f1;
  }
  const double k = static_cast<double>(num_classes);
  s.precision = 100.0 * s.precision / k;
  s.recall = 100.0 * s.recall / k;
  s.f1 = 100.0 * s.f1 / k;
  return s;
}

Summary summarize(std::vector<double> values, bool sample) {
  Summary s;
  s.per_fold = std::move(values);
  const auto n = s.per_fold.size();
  if (n == 0) return s;
  s.mean = std::accumulate(s.per_fold.begin(), s.per_fold.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : s.per_fold) ss += (v - s.mean) * (v - s.mean);
  const std::size_t den = sample ? n - 1 : n;
  s.std = den == 0 ? 0.0 : std::sqrt(ss / static_cast<double>(den));
  return s;
}

MetricsReport aggregate(std::span<const Scores> folds, bool sample_std) {
  std::vector<double> a, p, r, f;
  for (const auto& s : folds) {
    a.push_back(s.accuracy);
    p.push_back(s.precision);
    r.push_back(s.recall);
    f.push_back(s.f1);
  }
  return {summarize(a, sample_std), summarize(p, sample_std), summarize(r, sample_std), summarize(f, sample_std)};
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < classes; ++c) t += at(c, c);
  return t;
}

std::vector<double> ConfusionMatrix::normalized(std::vector<std::size_t>* empty_rows) const {
  std::vector<double> out(counts.size(), 0.0);
  if (empty_rows) empty_rows->clear();
  for (std::size_t r = 0; r < classes; ++r) {
    std::size_t support = 0;
    for (std::size_t c = 0; c < classes; ++c) support += at(r, c);
    if (support == 0) {
      if (empty_rows) empty_rows->push_back(r);
      continue;
    }
    for (std::size_t c = 0; c < classes; ++c) out[r * classes + c] = ratio(at(r, c), support);
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> gold, std::size_t num_classes) {
  check_labels(predictions, gold, num_classes);
  ConfusionMatrix cm;
  cm.classes = num_classes;
  cm.counts.assign(num_classes * num_classes, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++cm.counts[static_cast<std::size_t>(gold[i]) * num_classes + static_cast<std::size_t>(predictions[i])];
  }
  return cm;
}

}  // namespace gravamen::eval
