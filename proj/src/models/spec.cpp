#include "gravamen/models/spec.hpp"

#include <string>

#include "gravamen/error.hpp"

namespace gravamen::models {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Majority: return "majority";
    case ModelKind::LrBow: return "lr_bow";
    case ModelKind::BiGruAtt: return "bigru_att";
    case ModelKind::Transformer: return "transformer";
    case ModelKind::MTransformer: return "m_transformer";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto k : {ModelKind::Majority, ModelKind::LrBow, ModelKind::BiGruAtt, ModelKind::Transformer,
                 ModelKind::MTransformer}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

void ModelSpec::validate() const {
  if (kind == ModelKind::MTransformer && feature_mode == lingfeat::FeatureMode::None) {
    throw ConfigError("m_transformer requires a feature mode other than none");
  }
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (hidden == 0 || embed_dim == 0 || layers == 0 || heads == 0 || ffn_dim == 0 || projection_dim == 0 ||
      max_len == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
  if (!(gate_scale > 0.0)) throw ConfigError("gate_scale must be positive");
  if (!(gate_eps > 0.0)) throw ConfigError("gate_eps must be positive");
  if ((kind == ModelKind::Transformer || kind == ModelKind::MTransformer) && embed_dim % heads != 0) {
    throw ConfigError("embed_dim must be divisible by heads");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
}

}  // namespace gravamen::models
