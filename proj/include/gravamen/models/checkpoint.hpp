#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "gravamen/models/model.hpp"
#include "gravamen/models/trainer.hpp"

namespace gravamen::models {

// Checkpoint file layout (JSON):
//   format        "gravamen-checkpoint"
//   version       1
//   architecture  Model::architecture()
//   spec          ModelSpec fields
//   shape         {vocab_size, feature_dim}
//   vocab_hash    16 hex digits
//   extra         free-form object (multi-task settings live here)
//   params        [{name, shape, values}] in store order
//   history       {best_epoch, best_val_loss, epochs: [EpochRecord fields]}
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string architecture;
  ModelSpec spec;
  ModelShape shape;
  std::uint64_t vocab_hash = 0;
  nlohmann::json extra = nlohmann::json::object();
  num::ParamStore params;
  TrainHistory history;
};

nlohmann::json spec_to_json(const ModelSpec& spec);
// Throws ConfigError on unknown or ill-typed fields.
ModelSpec spec_from_json(const nlohmann::json& j);

nlohmann::json history_to_json(const TrainHistory& history);
TrainHistory history_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Model& model, ModelShape shape, std::uint64_t vocab_hash,
                                  const TrainHistory& history, const nlohmann::json& extra = nlohmann::json::object());
// Throws DataError for a wrong format tag, unsupported version or malformed body.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void write_checkpoint(const std::filesystem::path& path, const Model& model, ModelShape shape,
                      std::uint64_t vocab_hash, const TrainHistory& history,
                      const nlohmann::json& extra = nlohmann::json::object());
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies checkpoint parameters into a freshly built model; names and shapes must match exactly.
void load_params(Model& model, const Checkpoint& checkpoint);

}  // namespace gravamen::models
