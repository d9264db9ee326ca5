#include "gravamen/models/batch.hpp"

#include <algorithm>
#include <numeric>

#include "gravamen/error.hpp"

namespace gravamen::models {

Batch make_batch(std::span<const Example> examples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("empty batch");
  Batch b;
  b.size = indices.size();
  for (auto i : indices) b.seq_len = std::max(b.seq_len, examples[i].length);
  const std::size_t f = examples[indices[0]].features.size();
  b.has_features = f > 0;
  b.ids.assign(b.size * b.seq_len, corpus::kPadId);
  std::vector<double> feats;
  feats.reserve(b.size * f);
  for (std::size_t r = 0; r < b.size; ++r) {
    const Example& ex = examples[indices[r]];
    if (ex.length == 0) throw DataError("document '" + ex.id + "' has no tokens");
    if (ex.features.size() != f) throw DataError("document '" + ex.id + "' has a mismatched feature vector");
    std::copy_n(ex.ids.begin(), ex.length, b.ids.begin() + static_cast<std::ptrdiff_t>(r * b.seq_len));
    b.lengths.push_back(ex.length);
    feats.insert(feats.end(), ex.features.begin(), ex.features.end());
    b.labels.push_back(ex.label);
    b.binary_targets.push_back(complaint_target(ex.binary));
    b.severity.push_back(ex.severity);
  }
  if (b.has_features) b.features = num::Tensor({b.size, f}, std::move(feats));
  return b;
}

Batch make_batch(std::span<const Example> examples) {
  std::vector<std::size_t> all(examples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return make_batch(examples, all);
}

std::vector<Example> make_examples(std::span<const corpus::Document> docs, const corpus::Vocabulary& vocab,
                                   std::size_t max_len, Target target, lingfeat::FeatureMode mode,
                                   const lingfeat::FeatureTable* features) {
  using corpus::BinaryLabel;
  using corpus::SeverityLabel;
  std::vector<Example> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    Example ex;
    ex.id = doc.id;
    auto enc = corpus::encode(doc, vocab, max_len);
    ex.ids = std::move(enc.ids);
    ex.length = enc.length;
    if (ex.length == 0) throw DataError("document '" + doc.id + "' has no tokens");
    if (doc.binary_label) ex.binary = static_cast<int>(*doc.binary_label);
    if (doc.severity_label) {
      ex.severity = static_cast<int>(*doc.severity_label);
    } else if (doc.binary_label == BinaryLabel::NonComplaint) {
      ex.severity = static_cast<int>(SeverityLabel::NoComplaintSeverity);
    }
    if (ex.binary < 0 && ex.severity >= 0) {
      ex.binary = static_cast<int>(ex.severity == static_cast<int>(SeverityLabel::NoComplaintSeverity)
                                       ? BinaryLabel::NonComplaint
                                       : BinaryLabel::Complaint);
    }
    switch (target) {
      case Target::Severity4:
        if (ex.severity < 0 || ex.severity >= static_cast<int>(corpus::kSeverityClasses)) {
          throw DataError("document '" + doc.id + "' lacks a complaint severity label");
        }
        ex.label = ex.severity;
        break;
      case Target::Severity5:
        if (ex.severity < 0 || ex.binary < 0) throw DataError("document '" + doc.id + "' lacks binary or severity label");
        ex.label = ex.severity;
        break;
      case Target::Binary:
        if (ex.binary < 0) throw DataError("document '" + doc.id + "' lacks a binary label");
        ex.label = ex.binary;
        break;
    }
    if (mode != lingfeat::FeatureMode::None) {
      if (features == nullptr) throw DataError("feature mode " + std::string(to_string(mode)) + " needs features");
      auto it = features->find(doc.id);
      if (it == features->end()) throw DataError("no linguistic features for document '" + doc.id + "'");
      ex.features = lingfeat::concat_features(it->second.emotion, it->second.topic, mode);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace gravamen::models
