#include "gravamen/mtl/mtl.hpp"

#include <stdexcept>
#include <string>

#include "gravamen/corpus/document.hpp"
#include "gravamen/error.hpp"

namespace gravamen::mtl {

using models::Forward;
using num::Var;

std::string_view to_string(MtlArch arch) {
  switch (arch) {
    case MtlArch::HardSharing: return "hard_sharing";
    case MtlArch::DoubleEncoder: return "double_encoder";
    case MtlArch::GatedDoubleEncoder: return "gated_double_encoder";
    case MtlArch::MtlM: return "mtl_m";
    case MtlArch::MtlMDe: return "mtl_m_de";
  }
  return "?";
}

MtlArch parse_mtl_arch(std::string_view text) {
  for (auto a : {MtlArch::HardSharing, MtlArch::DoubleEncoder, MtlArch::GatedDoubleEncoder, MtlArch::MtlM,
                 MtlArch::MtlMDe}) {
    if (text == to_string(a)) return a;
  }
  throw ConfigError("unknown multi-task architecture '" + std::string(text) + "'");
}

void MtlConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0,1]");
  if (stack_depth == 0) throw ConfigError("stack_depth must be positive");
}

double joint_loss(double l_com, double l_sev, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (l_com < 0.0 || l_sev < 0.0) throw std::invalid_argument("task losses must be non-negative");
  return (1.0 - alpha) * l_com + alpha * l_sev;
}

Var joint_loss(Var l_com, Var l_sev, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  return num::add(num::scale(l_com, 1.0 - alpha), num::scale(l_sev, alpha));
}

namespace {

bool transformer_arch(MtlArch a) { return a == MtlArch::MtlM || a == MtlArch::MtlMDe; }

models::ModelSpec branch_spec(models::ModelSpec spec, MtlArch arch) {
  spec.kind = transformer_arch(arch) ? models::ModelKind::MTransformer : models::ModelKind::BiGruAtt;
  spec.num_classes = corpus::kJointSeverityClasses;
  return spec;
}

}  // namespace

MtlModel::MtlModel(const models::ModelSpec& spec, const MtlConfig& config, models::ModelShape shape,
                   std::uint64_t seed)
    : Model(branch_spec(spec, config.arch)), config_(config) {
  spec_.validate();
  config_.validate();
  if (shape.vocab_size == 0) throw ConfigError("empty vocabulary");
  num::Rng rng(seed);
  const std::size_t h = spec_.hidden;
  const std::size_t classes = corpus::kJointSeverityClasses;
  if (!transformer_arch(config_.arch)) {
    embed_ = models::TokenEmbedding::create(params_, "embed", shape.vocab_size, spec_.embed_dim, rng);
    shared_ = models::BiGruStack::create(params_, "shared", spec_.embed_dim, h, config_.stack_depth, rng);
    std::size_t bin_input = 2 * h;
    if (config_.arch != MtlArch::HardSharing) {
      task_ = models::BiGruStack::create(params_, "task", spec_.embed_dim, h, config_.stack_depth, rng);
      bin_input = 4 * h;
    }
    bin_branch_ = models::BiGruAttBranch::create(params_, "bin", bin_input, h, rng);
    sev_branch_ = models::BiGruAttBranch::create(params_, "sev", 2 * h, h, rng);
    bin_head_ = models::Linear::create(params_, "bin.head", 2 * h, 1, rng);
    sev_head_ = models::Linear::create(params_, "sev.head", 2 * h, classes, rng);
    return;
  }
  if (shape.feature_dim != lingfeat::feature_dim(spec_.feature_mode)) {
    throw ConfigError("feature width " + std::to_string(shape.feature_dim) + " does not match mode " +
                      std::string(lingfeat::to_string(spec_.feature_mode)));
  }
  fused_ = models::TransformerEmbedding::create(params_, "embed", spec_, shape.vocab_size, shape.feature_dim, true,
                                                rng);
  if (config_.arch == MtlArch::MtlM) {
    enc_shared_ = models::EncoderStack::create(params_, "encoder", spec_, rng);
  } else {
    enc_bin_ = models::EncoderStack::create(params_, "bin.encoder", spec_, rng);
    enc_sev_ = models::EncoderStack::create(params_, "sev.encoder", spec_, rng);
  }
  bin_head_ = models::Linear::create(params_, "bin.head", spec_.embed_dim, 1, rng);
  sev_head_ = models::Linear::create(params_, "sev.head", spec_.embed_dim, classes, rng);
}

std::string MtlModel::architecture() const { return std::string(to_string(config_.arch)); }

Forward MtlModel::forward(num::Tape& tape, const num::ParamStore& store, const models::Batch& batch, bool train,
                          num::Rng& rng) const {
  return transformer_arch(config_.arch) ? forward_transformer(tape, store, batch, train, rng)
                                        : forward_bigru(tape, store, batch, train, rng);
}

Forward MtlModel::forward_bigru(num::Tape& tape, const num::ParamStore& store, const models::Batch& batch,
                                bool train, num::Rng& rng) const {
  const Var x = num::dropout(embed_.apply(tape, store, batch), spec_.dropout, train, rng);
  const Var shared = shared_.apply(tape, store, x, batch.lengths);
  Var bin_in = shared;
  if (config_.arch != MtlArch::HardSharing) {
    const Var task = task_.apply(tape, store, x, batch.lengths);
    if (config_.arch == MtlArch::GatedDoubleEncoder) {
      const Var parts[] = {num::scale(task, 1.0 - config_.beta), num::scale(shared, config_.beta)};
      bin_in = num::concat(parts, 2);
    } else {
      const Var parts[] = {task, shared};
      bin_in = num::concat(parts, 2);
    }
  }
  const auto bin = bin_branch_.apply(tape, store, bin_in, batch.lengths);
  const auto sev = sev_branch_.apply(tape, store, shared, batch.lengths);
  Forward out;
  out.binary_input = bin_in;
  out.binary_logit = num::reshape(bin_head_.apply(tape, store, bin.context), {batch.size});
  out.logits = sev_head_.apply(tape, store, sev.context);
  out.attention = {bin.weights, sev.weights};
  return out;
}

Forward MtlModel::forward_transformer(num::Tape& tape, const num::ParamStore& store, const models::Batch& batch,
                                      bool train, num::Rng& rng) const {
  const Var x = fused_.apply(tape, store, batch, spec_, train, rng);
  const auto valid = models::key_validity(batch);
  Forward out;
  if (config_.arch == MtlArch::MtlM) {
    const Var pooled = enc_shared_.pooled(tape, store, x, valid, spec_, train, rng, &out.attention);
    out.binary_input = pooled;
    out.binary_logit = num::reshape(bin_head_.apply(tape, store, pooled), {batch.size});
    out.logits = sev_head_.apply(tape, store, pooled);
    return out;
  }
  out.binary_input = x;
  const Var bin = enc_bin_.pooled(tape, store, x, valid, spec_, train, rng, &out.attention);
  const Var sev = enc_sev_.pooled(tape, store, x, valid, spec_, train, rng, &out.attention);
  out.binary_logit = num::reshape(bin_head_.apply(tape, store, bin), {batch.size});
  out.logits = sev_head_.apply(tape, store, sev);
  return out;
}

models::LossFn joint_loss_fn(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  return [alpha](num::Tape& tape, const models::Model& model, const num::ParamStore& store, const models::Batch& batch,
                 bool train, num::Rng& rng) {
    const auto fwd = model.forward(tape, store, batch, train, rng);
    if (!fwd.binary_logit.valid()) throw std::logic_error("joint loss needs a model with a binary head");
    const Var com = num::binary_cross_entropy(fwd.binary_logit, batch.binary_targets);
    const Var sev = num::cross_entropy(fwd.logits, batch.severity);
    return models::LossValue{joint_loss(com, sev, alpha), com.value().item(), sev.value().item()};
  };
}

models::TrainHistory train_mtl(MtlModel& model, const models::TrainConfig& cfg,
                               std::span<const models::Example> train, std::span<const models::Example> val) {
  for (auto set : {train, val}) {
    for (const auto& ex : set) {
      if (ex.binary < 0 || ex.severity < 0 ||
          ex.severity >= static_cast<int>(corpus::kJointSeverityClasses)) {
        throw DataError("document '" + ex.id + "' lacks a binary or severity label");
      }
    }
  }
  return models::fit(model, cfg, train, val, joint_loss_fn(model.config().alpha));
}

}  // namespace gravamen::mtl
