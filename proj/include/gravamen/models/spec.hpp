#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "gravamen/lingfeat/features.hpp"

namespace gravamen::models {

enum class ModelKind { Majority, LrBow, BiGruAtt, Transformer, MTransformer };

std::string_view to_string(ModelKind kind);
// Accepts majority, lr_bow, bigru_att, transformer, m_transformer.
ModelKind parse_model_kind(std::string_view text);

struct ModelSpec {
  ModelKind kind = ModelKind::BiGruAtt;
  lingfeat::FeatureMode feature_mode = lingfeat::FeatureMode::None;
  std::size_t num_classes = 4;
  std::size_t hidden = 128;          // GRU hidden size h
  double dropout = 0.2;              // d
  std::size_t embed_dim = 64;
  std::size_t layers = 2;            // encoder blocks (transformer) / stacked BiGRU depth (MTL)
  std::size_t heads = 4;
  std::size_t ffn_dim = 256;
  std::size_t projection_dim = 200;  // linguistic feature projection size
  double gate_scale = 0.5;           // lambda bounding the gate displacement
  double gate_eps = 1e-6;
  std::size_t max_len = 50;
  double layer_norm_eps = 1e-5;

  // Throws ConfigError on violated invariants.
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double l2 = 1e-2;  // lr_bow only

  void validate() const;
};

}  // namespace gravamen::models
