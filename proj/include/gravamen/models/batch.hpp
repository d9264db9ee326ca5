#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gravamen/corpus/vocabulary.hpp"
#include "gravamen/lingfeat/features.hpp"
#include "gravamen/numcore/tensor.hpp"

namespace gravamen::models {

// One encoded document ready for a model. Label fields hold -1 when absent.
struct Example {
  std::string id;
  std::vector<int> ids;  // padded to max_len
  std::size_t length = 0;
  std::vector<double> features;
  int label = -1;     // single-task target class
  int binary = -1;    // corpus::BinaryLabel value
  int severity = -1;  // 5-way severity (NoComplaintSeverity included)
};

// Binary head target: 1 for a complaint, 0 otherwise.
inline double complaint_target(int binary) { return binary == 0 ? 1.0 : 0.0; }

// Padded mini-batch. Sequences are trimmed to the longest true length in the batch,
// which leaves every masked computation unchanged.
struct Batch {
  std::size_t size = 0;
  std::size_t seq_len = 0;
  std::vector<int> ids;  // size x seq_len
  std::vector<std::size_t> lengths;
  num::Tensor features;  // size x F, empty when the batch carries none
  bool has_features = false;
  std::vector<int> labels;
  std::vector<double> binary_targets;
  std::vector<int> severity;
};

Batch make_batch(std::span<const Example> examples, std::span<const std::size_t> indices);
Batch make_batch(std::span<const Example> examples);

// Which label an Example's `label` field carries.
enum class Target { Severity4, Severity5, Binary };

// Encodes documents. `features` may be null when mode is None; otherwise each document id must be present.
std::vector<Example> make_examples(std::span<const corpus::Document> docs, const corpus::Vocabulary& vocab,
                                   std::size_t max_len, Target target, lingfeat::FeatureMode mode,
                                   const lingfeat::FeatureTable* features);

}  // namespace gravamen::models
