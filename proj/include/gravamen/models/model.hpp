#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gravamen/models/batch.hpp"
#include "gravamen/models/layers.hpp"
#include "gravamen/models/spec.hpp"
#include "gravamen/numcore/params.hpp"
#include "gravamen/numcore/tape.hpp"

namespace gravamen::models {

struct Forward {
  num::Var logits;        // [B, K] softmax head
  num::Var binary_logit;  // [B] sigmoid head, multi-task models only
  num::Var binary_input;  // representation entering the binary branch (multi-task models)
  std::vector<num::Var> attention;
};

// A network with its own parameter store. forward() reads parameters from the store it is
// given, so snapshots and perturbed copies can be evaluated with the same wiring.
class Model {
 public:
  virtual ~Model() = default;

  virtual Forward forward(num::Tape& tape, const num::ParamStore& store, const Batch& batch, bool train,
                          num::Rng& rng) const = 0;
  virtual bool multitask() const { return false; }
  virtual std::string architecture() const = 0;

  Forward forward(num::Tape& tape, const Batch& batch, bool train, num::Rng& rng) const {
    return forward(tape, params_, batch, train, rng);
  }

  num::ParamStore& params() { return params_; }
  const num::ParamStore& params() const { return params_; }
  const ModelSpec& spec() const { return spec_; }

 protected:
  explicit Model(ModelSpec spec) : spec_(spec) {}

  ModelSpec spec_;
  num::ParamStore params_;
};

// Sizes a model is built for, besides its spec.
struct ModelShape {
  std::size_t vocab_size = 0;
  std::size_t feature_dim = 0;
};

// embeddings -> dropout -> BiGRU -> additive attention -> softmax head
class BiGruAttClassifier : public Model {
 public:
  BiGruAttClassifier(const ModelSpec& spec, ModelShape shape, std::uint64_t seed);

  Forward forward(num::Tape& tape, const num::ParamStore& store, const Batch& batch, bool train,
                  num::Rng& rng) const override;
  using Model::forward;
  std::string architecture() const override { return "bigru_att"; }

 private:
  TokenEmbedding embed_;
  BiGruAttBranch branch_;
  Linear head_;
};

// Mini transformer encoder pooled at the classification position. With kind m_transformer the
// embeddings pass through the shifting gate first.
class TransformerClassifier : public Model {
 public:
  TransformerClassifier(const ModelSpec& spec, ModelShape shape, std::uint64_t seed);

  Forward forward(num::Tape& tape, const num::ParamStore& store, const Batch& batch, bool train,
                  num::Rng& rng) const override;
  using Model::forward;
  std::string architecture() const override { return std::string(to_string(spec_.kind)); }

  const TransformerEmbedding& embedding() const { return embed_; }

 private:
  TransformerEmbedding embed_;
  EncoderStack encoder_;
  Linear head_;
};

// Builds the network for a bigru_att, transformer or m_transformer spec.
std::unique_ptr<Model> make_model(const ModelSpec& spec, ModelShape shape, std::uint64_t seed);

// Softmax probabilities [N, K] (or complaint probabilities for the binary head) in eval mode.
std::vector<std::vector<double>> predict_proba(const Model& model, std::span<const Example> examples,
                                               std::size_t batch_size = 64);
std::vector<double> predict_complaint_proba(const Model& model, std::span<const Example> examples,
                                            std::size_t batch_size = 64);

}  // namespace gravamen::models
