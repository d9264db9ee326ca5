#include "gravamen/models/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gravamen/error.hpp"

namespace gravamen::models {

using nlohmann::json;

json spec_to_json(const ModelSpec& s) {
  return json{{"kind", to_string(s.kind)},
              {"feature_mode", lingfeat::to_string(s.feature_mode)},
              {"num_classes", s.num_classes},
              {"hidden", s.hidden},
              {"dropout", s.dropout},
              {"embed_dim", s.embed_dim},
              {"layers", s.layers},
              {"heads", s.heads},
              {"ffn_dim", s.ffn_dim},
              {"projection_dim", s.projection_dim},
              {"gate_scale", s.gate_scale},
              {"gate_eps", s.gate_eps},
              {"max_len", s.max_len},
              {"layer_norm_eps", s.layer_norm_eps}};
}

ModelSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model spec must be an object");
  ModelSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") {
        s.kind = parse_model_kind(value.get<std::string>());
      } else if (key == "feature_mode") {
        s.feature_mode = lingfeat::parse_feature_mode(value.get<std::string>());
      } else if (key == "num_classes") {
        s.num_classes = value.get<std::size_t>();
      } else if (key == "hidden") {
        s.hidden = value.get<std::size_t>();
      } else if (key == "dropout") {
        s.dropout = value.get<double>();
      } else if (key == "embed_dim") {
        s.embed_dim = value.get<std::size_t>();
      } else if (key == "layers") {
        s.layers = value.get<std::size_t>();
      } else if (key == "heads") {
        s.heads = value.get<std::size_t>();
      } else if (key == "ffn_dim") {
        s.ffn_dim = value.get<std::size_t>();
      } else if (key == "projection_dim") {
        s.projection_dim = value.get<std::size_t>();
      } else if (key == "gate_scale") {
        s.gate_scale = value.get<double>();
      } else if (key == "gate_eps") {
        s.gate_eps = value.get<double>();
      } else if (key == "max_len") {
        s.max_len = value.get<std::size_t>();
      } else if (key == "layer_norm_eps") {
        s.layer_norm_eps = value.get<double>();
      } else {
        throw ConfigError("unknown model spec field '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("ill-typed model spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

json history_to_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& r : h.epochs) {
    epochs.push_back({{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"val_loss", r.val_loss},
                      {"train_com", r.train_com},
                      {"train_sev", r.train_sev},
                      {"val_com", r.val_com},
                      {"val_sev", r.val_sev}});
  }
  return json{{"best_epoch", h.best_epoch}, {"best_val_loss", h.best_val_loss}, {"epochs", epochs}};
}

TrainHistory history_from_json(const json& j) {
  TrainHistory h;
  h.best_epoch = j.at("best_epoch").get<std::size_t>();
  h.best_val_loss = j.at("best_val_loss").get<double>();
  for (const auto& e : j.at("epochs")) {
    EpochRecord r;
    r.epoch = e.at("epoch").get<std::size_t>();
    r.train_loss = e.at("train_loss").get<double>();
    r.val_loss = e.at("val_loss").get<double>();
    r.train_com = e.at("train_com").get<double>();
    r.train_sev = e.at("train_sev").get<double>();
    r.val_com = e.at("val_com").get<double>();
    r.val_sev = e.at("val_sev").get<double>();
    h.epochs.push_back(r);
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

json checkpoint_to_json(const Model& model, ModelShape shape, std::uint64_t vocab_hash, const TrainHistory& history,
                        const json& extra) {
  json params = json::array();
  const auto& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& t = store.at(i);
    params.push_back({{"name", store.name(i)}, {"shape", t.shape()}, {"values", t.values()}});
  }
  return json{{"format", "gravamen-checkpoint"},
              {"version", kCheckpointVersion},
              {"architecture", model.architecture()},
              {"spec", spec_to_json(model.spec())},
              {"shape", {{"vocab_size", shape.vocab_size}, {"feature_dim", shape.feature_dim}}},
              {"vocab_hash", hex64(vocab_hash)},
              {"extra", extra},
              {"params", params},
              {"history", history_to_json(history)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format") != "gravamen-checkpoint") throw DataError("not a gravamen checkpoint");
    if (j.at("version") != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + j.at("version").dump());
    }
    Checkpoint c;
    c.architecture = j.at("architecture").get<std::string>();
    c.spec = spec_from_json(j.at("spec"));
    c.shape.vocab_size = j.at("shape").at("vocab_size").get<std::size_t>();
    c.shape.feature_dim = j.at("shape").at("feature_dim").get<std::size_t>();
    c.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
    c.extra = j.at("extra");
    for (const auto& p : j.at("params")) {
      c.params.add(p.at("name").get<std::string>(),
                   num::Tensor(p.at("shape").get<num::Shape>(), p.at("values").get<std::vector<double>>()));
    }
    c.history = history_from_json(j.at("history"));
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const Model& model, ModelShape shape,
                      std::uint64_t vocab_hash, const TrainHistory& history, const json& extra) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model, shape, vocab_hash, history, extra).dump() << '\n';
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

void load_params(Model& model, const Checkpoint& checkpoint) {
  auto& store = model.params();
  if (store.size() != checkpoint.params.size()) {
    throw DataError("checkpoint holds " + std::to_string(checkpoint.params.size()) + " tensors, model expects " +
                    std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (store.name(i) != checkpoint.params.name(i) || store.at(i).shape() != checkpoint.params.at(i).shape()) {
      throw DataError("checkpoint tensor '" + checkpoint.params.name(i) + "' does not match model tensor '" +
                      store.name(i) + "'");
    }
    store.at(i) = checkpoint.params.at(i);
  }
}

}  // namespace gravamen::models
