#include "gravamen/models/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gravamen/error.hpp"

namespace gravamen::models {

using num::Var;

BiGruAttClassifier::BiGruAttClassifier(const ModelSpec& spec, ModelShape shape, std::uint64_t seed)
    : Model(spec) {
  spec_.validate();
  if (shape.vocab_size == 0) throw ConfigError("empty vocabulary");
  num::Rng rng(seed);
  embed_ = TokenEmbedding::create(params_, "embed", shape.vocab_size, spec_.embed_dim, rng);
  branch_ = BiGruAttBranch::create(params_, "bigru", spec_.embed_dim, spec_.hidden, rng);
  head_ = Linear::create(params_, "head", 2 * spec_.hidden, spec_.num_classes, rng);
}

Forward BiGruAttClassifier::forward(num::Tape& tape, const num::ParamStore& store, const Batch& batch, bool train,
                                    num::Rng& rng) const {
  const Var x = num::dropout(embed_.apply(tape, store, batch), spec_.dropout, train, rng);
  const auto pooled = branch_.apply(tape, store, x, batch.lengths);
  Forward out;
  out.logits = head_.apply(tape, store, pooled.context);
  out.attention.push_back(pooled.weights);
  return out;
}

TransformerClassifier::TransformerClassifier(const ModelSpec& spec, ModelShape shape, std::uint64_t seed)
    : Model(spec) {
  spec_.validate();
  if (shape.vocab_size == 0) throw ConfigError("empty vocabulary");
  const bool fused = spec_.kind == ModelKind::MTransformer;
  if (fused && shape.feature_dim != lingfeat::feature_dim(spec_.feature_mode)) {
    throw ConfigError("feature width " + std::to_string(shape.feature_dim) + " does not match mode " +
                      std::string(lingfeat::to_string(spec_.feature_mode)));
  }
  num::Rng rng(seed);
  embed_ = TransformerEmbedding::create(params_, "embed", spec_, shape.vocab_size, shape.feature_dim, fused, rng);
  encoder_ = EncoderStack::create(params_, "encoder", spec_, rng);
  head_ = Linear::create(params_, "head", spec_.embed_dim, spec_.num_classes, rng);
}

Forward TransformerClassifier::forward(num::Tape& tape, const num::ParamStore& store, const Batch& batch,
                                       bool train, num::Rng& rng) const {
  const Var x = embed_.apply(tape, store, batch, spec_, train, rng);
  Forward out;
  const Var pooled = encoder_.pooled(tape, store, x, key_validity(batch), spec_, train, rng, &out.attention);
  out.logits = head_.apply(tape, store, pooled);
  return out;
}

std::unique_ptr<Model> make_model(const ModelSpec& spec, ModelShape shape, std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::BiGruAtt: return std::make_unique<BiGruAttClassifier>(spec, shape, seed);
    case ModelKind::Transformer:
    case ModelKind::MTransformer: return std::make_unique<TransformerClassifier>(spec, shape, seed);
    default: break;
  }
  throw ConfigError("model kind " + std::string(to_string(spec.kind)) + " is not a neural network");
}

namespace {

template <typename Fn>
void for_each_batch(std::size_t n, std::size_t batch_size, Fn&& fn) {
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += batch_size) {
    idx.resize(std::min(batch_size, n - start));
    std::iota(idx.begin(), idx.end(), start);
    fn(idx);
  }
}

}  // namespace

std::vector<std::vector<double>> predict_proba(const Model& model, std::span<const Example> examples,
                                               std::size_t batch_size) {
  std::vector<std::vector<double>> out;
  out.reserve(examples.size());
  num::Rng rng(0);
  for_each_batch(examples.size(), batch_size, [&](const std::vector<std::size_t>& idx) {
    num::Tape tape(false);
    const auto fwd = model.forward(tape, make_batch(examples, idx), false, rng);
    const auto probs = num::softmax_values(fwd.logits.value(), 1);
    const std::size_t k = probs.dim(1);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.emplace_back(probs.data().begin() + static_cast<std::ptrdiff_t>(r * k),
                       probs.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
    }
  });
  return out;
}

std::vector<double> predict_complaint_proba(const Model& model, std::span<const Example> examples,
                                            std::size_t batch_size) {
  if (!model.multitask()) throw std::logic_error("model has no binary head");
  std::vector<double> out;
  out.reserve(examples.size());
  num::Rng rng(0);
  for_each_batch(examples.size(), batch_size, [&](const std::vector<std::size_t>& idx) {
    num::Tape tape(false);
    const auto fwd = model.forward(tape, make_batch(examples, idx), false, rng);
    for (double z : fwd.binary_logit.value().data()) out.push_back(1.0 / (1.0 + std::exp(-z)));
  });
  return out;
}

}  // namespace gravamen::models
