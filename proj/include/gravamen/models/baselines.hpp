#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gravamen/corpus/vocabulary.hpp"

namespace gravamen::models {

// n_eval copies of the most frequent training label; ties go to the smaller label value.
std::vector<int> majority_predict(std::span<const int> train_labels, std::size_t n_eval);

// Sparse token-count vector: (vocabulary id, count) pairs in ascending id order.
using BagOfWords = std::vector<std::pair<int, double>>;

BagOfWords bag_of_words(std::span<const std::string> tokens, const corpus::Vocabulary& vocab);

// Multinomial logistic regression over token counts with an L2 penalty on the weights,
// trained by full-batch gradient descent with backtracking line search.
class LrBow {
 public:
  LrBow(std::size_t vocab_size, std::size_t classes);

  // Throws DataError for an empty vocabulary or training set.
  static LrBow train(std::span<const BagOfWords> docs, std::span<const int> labels, std::size_t vocab_size,
                     std::size_t classes, double l2, std::size_t max_iterations = 300);

  std::vector<double> predict_proba(const BagOfWords& doc) const;
  int predict(const BagOfWords& doc) const;

  // Mean cross-entropy plus (l2 / 2) * ||W||^2 (bias excluded).
  double objective(std::span<const BagOfWords> docs, std::span<const int> labels, double l2) const;

  // Objective value before training and after every accepted step.
  const std::vector<double>& loss_history() const { return history_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t classes() const { return classes_; }
  const std::vector<double>& weights() const { return weights_; }  // vocab_size x classes
  const std::vector<double>& bias() const { return bias_; }

 private:
  std::vector<double> logits(const BagOfWords& doc) const;

  std::size_t vocab_size_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
  std::vector<double> history_;
};

}  // namespace gravamen::models
