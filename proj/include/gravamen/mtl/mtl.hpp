#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "gravamen/models/model.hpp"
#include "gravamen/models/trainer.hpp"

namespace gravamen::mtl {

enum class MtlArch { HardSharing, DoubleEncoder, GatedDoubleEncoder, MtlM, MtlMDe };

std::string_view to_string(MtlArch arch);
// Accepts hard_sharing, double_encoder, gated_double_encoder, mtl_m, mtl_m_de.
MtlArch parse_mtl_arch(std::string_view text);

struct MtlConfig {
  MtlArch arch = MtlArch::HardSharing;
  double alpha = 0.1;
  double beta = 0.5;           // gated double encoder only
  std::size_t stack_depth = 2;  // stacked BiGRU encoders

  void validate() const;
};

// (1 - alpha) * l_com + alpha * l_sev. Throws std::invalid_argument for alpha outside [0, 1]
// or a negative loss.
double joint_loss(double l_com, double l_sev, double alpha);
num::Var joint_loss(num::Var l_com, num::Var l_sev, double alpha);

// Two-headed network: Forward::binary_logit is the complaint logit, Forward::logits the five
// severity logits (index 4 is NoComplaintSeverity).
class MtlModel : public models::Model {
 public:
  // The BiGRU variants read embed_dim, hidden and dropout from `spec`; the transformer variants
  // read the full transformer and gate settings and need spec.feature_mode != none.
  MtlModel(const models::ModelSpec& spec, const MtlConfig& config, models::ModelShape shape, std::uint64_t seed);

  models::Forward forward(num::Tape& tape, const num::ParamStore& store, const models::Batch& batch, bool train,
                          num::Rng& rng) const override;
  using models::Model::forward;
  bool multitask() const override { return true; }
  std::string architecture() const override;
  const MtlConfig& config() const { return config_; }

 private:
  models::Forward forward_bigru(num::Tape& tape, const num::ParamStore& store, const models::Batch& batch, bool train,
                                num::Rng& rng) const;
  models::Forward forward_transformer(num::Tape& tape, const num::ParamStore& store, const models::Batch& batch,
                                      bool train, num::Rng& rng) const;

  MtlConfig config_;
  models::TokenEmbedding embed_;
  models::BiGruStack shared_, task_;
  models::BiGruAttBranch bin_branch_, sev_branch_;
  models::TransformerEmbedding fused_;
  models::EncoderStack enc_shared_, enc_bin_, enc_sev_;
  models::Linear bin_head_, sev_head_;
};

// Joint loss over a batch: BCE of the complaint logit and CE of the severity logits.
models::LossFn joint_loss_fn(double alpha);

// Every example needs Example::binary and a five-way Example::severity; throws DataError otherwise.
models::TrainHistory train_mtl(MtlModel& model, const models::TrainConfig& cfg, std::span<const models::Example> train,
                               std::span<const models::Example> val);

}  // namespace gravamen::mtl
