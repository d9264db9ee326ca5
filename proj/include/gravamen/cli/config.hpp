#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "gravamen/eval/cv.hpp"

namespace gravamen::cli {

struct ExperimentConfig {
  std::string dataset;   // corpus JSONL; relative paths resolve against GRAVAMEN_DATA_DIR
  std::string features;  // feature table JSONL; extracted on the fly when empty and needed
  eval::Experiment experiment;
  std::uint64_t fold_seed = 0;
  std::size_t outer_folds = 10;
  std::size_t inner_folds = 3;

  // Throws ConfigError.
  void validate() const;
};

// Flat `key = value` lines (blank lines and `#` comments ignored), or a JSON object with the
// same keys when the text starts with `{`. Unknown or repeated keys and badly typed values throw
// ConfigError; the result is validated.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Every key with its effective value; parse_config(config_to_json(c).dump()) reproduces c.
nlohmann::json config_to_json(const ExperimentConfig& config);
// Eight hex digits identifying the canonical snapshot.
std::string config_hash(const ExperimentConfig& config);

// `path` itself when absolute or when GRAVAMEN_DATA_DIR is unset, otherwise joined to it.
std::filesystem::path resolve_data_path(const std::string& path);

}  // namespace gravamen::cli
