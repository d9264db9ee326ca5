#include "gravamen/models/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gravamen/error.hpp"

namespace gravamen::models {

std::vector<int> majority_predict(std::span<const int> train_labels, std::size_t n_eval) {
  if (train_labels.empty()) throw DataError("majority baseline needs at least one training label");
  std::map<int, std::size_t> counts;
  for (int y : train_labels) ++counts[y];
  int best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return std::vector<int>(n_eval, best);
}

BagOfWords bag_of_words(std::span<const std::string> tokens, const corpus::Vocabulary& vocab) {
  std::map<int, double> counts;
  for (const auto& t : tokens) counts[vocab.id(t)] += 1.0;
  return {counts.begin(), counts.end()};
}

LrBow::LrBow(std::size_t vocab_size, std::size_t classes)
    : vocab_size_(vocab_size), classes_(classes), weights_(vocab_size * classes, 0.0), bias_(classes, 0.0) {
  if (vocab_size == 0) throw DataError("LR-BOW needs a non-empty vocabulary");
  if (classes < 2) throw std::invalid_argument("LR-BOW needs at least two classes");
}

std::vector<double> LrBow::logits(const BagOfWords& doc) const {
  std::vector<double> z = bias_;
  for (const auto& [id, count] : doc) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) throw std::out_of_range("token id outside vocabulary");
    const double* row = &weights_[static_cast<std::size_t>(id) * classes_];
    for (std::size_t k = 0; k < classes_; ++k) z[k] += count * row[k];
  }
  return z;
}

std::vector<double> LrBow::predict_proba(const BagOfWords& doc) const {
  auto z = logits(doc);
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) total += (v = std::exp(v - m));
  for (double& v : z) v /= total;
  return z;
}

int LrBow::predict(const BagOfWords& doc) const {
  const auto p = predict_proba(doc);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double LrBow::objective(std::span<const BagOfWords> docs, std::span<const int> labels, double l2) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto z = logits(docs[i]);
    const double m = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - m);
    loss += m + std::log(total) - z[static_cast<std::size_t>(labels[i])];
  }
  double sq = 0.0;
  for (double w : weights_) sq += w * w;
  return loss / static_cast<double>(docs.size()) + 0.5 * l2 * sq;
}

LrBow LrBow::train(std::span<const BagOfWords> docs, std::span<const int> labels, std::size_t vocab_size,
                   std::size_t classes, double l2, std::size_t max_iterations) {
  if (docs.empty()) throw DataError("LR-BOW needs at least one training document");
  if (docs.size() != labels.size()) throw std::invalid_argument("one label per document required");
  if (!(l2 >= 0.0)) throw std::invalid_argument("L2 strength must be non-negative");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw DataError("label outside the class range");
  }
  LrBow model(vocab_size, classes);
  const double n = static_cast<double>(docs.size());
  double loss = model.objective(docs, labels, l2);
  model.history_.push_back(loss);
  double step = 1.0;
  std::vector<double> gw(model.weights_.size()), gb(classes);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t j = 0; j < gw.size(); ++j) gw[j] = l2 * model.weights_[j];
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      auto p = model.predict_proba(docs[i]);
      p[static_cast<std::size_t>(labels[i])] -= 1.0;
      for (std::size_t k = 0; k < classes; ++k) gb[k] += p[k] / n;
      for (const auto& [id, count] : docs[i]) {
        double* row = &gw[static_cast<std::size_t>(id) * classes];
        for (std::size_t k = 0; k < classes; ++k) row[k] += count * p[k] / n;
      }
    }
    double gnorm2 = 0.0;
    for (double g : gw) gnorm2 += g * g;
    for (double g : gb) gnorm2 += g * g;
    if (gnorm2 < 1e-16) break;

    const auto w0 = model.weights_;
    const auto b0 = model.bias_;
    step = std::min(step * 2.0, 1e3);
    bool accepted = false;
    while (step > 1e-12) {
      for (std::size_t j = 0; j < gw.size(); ++j) model.weights_[j] = w0[j] - step * gw[j];
      for (std::size_t k = 0; k < classes; ++k) model.bias_[k] = b0[k] - step * gb[k];
      const double trial = model.objective(docs, labels, l2);
      if (trial <= loss - 0.5 * step * gnorm2) {
        loss = trial;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      model.weights_ = w0;
      model.bias_ = b0;
      break;
    }
    model.history_.push_back(loss);
  }
  return model;
}

}  // namespace gravamen::models
