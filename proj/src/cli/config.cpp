#include "gravamen/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "gravamen/error.hpp"

namespace gravamen::cli {

namespace {

using nlohmann::json;

struct Field {
  std::string_view key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<json(const ExperimentConfig&)> get;
};

[[noreturn]] void bad_value(std::string_view key, const std::string& value, std::string_view expected) {
  throw ConfigError("key '" + std::string(key) + "': '" + value + "' is not " + std::string(expected));
}

template <class T>
T parse_number(std::string_view key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    bad_value(key, value, std::is_floating_point_v<T> ? "a number" : "a non-negative integer");
  }
  return out;
}

bool parse_bool(std::string_view key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(key, value, "true or false");
}

#define GRAVAMEN_FIELD(T, key, member)                                                            \
  Field {                                                                                          \
    key, [](ExperimentConfig& c, const std::string& v) { c.member = parse_number<T>(key, v); },    \
        [](const ExperimentConfig& c) { return json(c.member); }                                   \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"dataset", [](ExperimentConfig& c, const std::string& v) { c.dataset = v; },
                 [](const ExperimentConfig& c) { return json(c.dataset); }});
    f.push_back({"features", [](ExperimentConfig& c, const std::string& v) { c.features = v; },
                 [](const ExperimentConfig& c) { return json(c.features); }});
    f.push_back({"task", [](ExperimentConfig& c, const std::string& v) { c.experiment.task = eval::parse_task(v); },
                 [](const ExperimentConfig& c) { return json(std::string(eval::to_string(c.experiment.task))); }});
    f.push_back({"model", [](ExperimentConfig& c, const std::string& v) { c.experiment.model.kind = models::parse_model_kind(v); },
                 [](const ExperimentConfig& c) { return json(std::string(models::to_string(c.experiment.model.kind))); }});
    f.push_back({"feature_mode",
                 [](ExperimentConfig& c, const std::string& v) {
                   try {
                     c.experiment.model.feature_mode = lingfeat::parse_feature_mode(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(e.what());
                   }
                 },
                 [](const ExperimentConfig& c) { return json(std::string(lingfeat::to_string(c.experiment.model.feature_mode))); }});
    f.push_back(GRAVAMEN_FIELD(std::size_t, "num_classes", experiment.model.num_classes));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "hidden", experiment.model.hidden));
    f.push_back(GRAVAMEN_FIELD(double, "dropout", experiment.model.dropout));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "embed_dim", experiment.model.embed_dim));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "layers", experiment.model.layers));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "heads", experiment.model.heads));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "ffn_dim", experiment.model.ffn_dim));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "projection_dim", experiment.model.projection_dim));
    f.push_back(GRAVAMEN_FIELD(double, "gate_scale", experiment.model.gate_scale));
    f.push_back(GRAVAMEN_FIELD(double, "gate_eps", experiment.model.gate_eps));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "max_len", experiment.model.max_len));
    f.push_back(GRAVAMEN_FIELD(double, "layer_norm_eps", experiment.model.layer_norm_eps));
    f.push_back(GRAVAMEN_FIELD(double, "learning_rate", experiment.train.learning_rate));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "epochs", experiment.train.epochs));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "batch_size", experiment.train.batch_size));
    f.push_back(GRAVAMEN_FIELD(std::uint64_t, "seed", experiment.train.seed));
    f.push_back(GRAVAMEN_FIELD(double, "l2", experiment.train.l2));
    f.push_back({"mtl_arch", [](ExperimentConfig& c, const std::string& v) { c.experiment.mtl.arch = mtl::parse_mtl_arch(v); },
                 [](const ExperimentConfig& c) { return json(std::string(mtl::to_string(c.experiment.mtl.arch))); }});
    f.push_back(GRAVAMEN_FIELD(double, "alpha", experiment.mtl.alpha));
    f.push_back(GRAVAMEN_FIELD(double, "beta", experiment.mtl.beta));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "stack_depth", experiment.mtl.stack_depth));
    f.push_back({"sample_std",
                 [](ExperimentConfig& c, const std::string& v) { c.experiment.sample_std = parse_bool("sample_std", v); },
                 [](const ExperimentConfig& c) { return json(c.experiment.sample_std); }});
    f.push_back(GRAVAMEN_FIELD(std::uint64_t, "fold_seed", fold_seed));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "outer_folds", outer_folds));
    f.push_back(GRAVAMEN_FIELD(std::size_t, "inner_folds", inner_folds));
    return f;
  }();
  return table;
}

#undef GRAVAMEN_FIELD

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// key -> (value, origin for messages)
using Entries = std::map<std::string, std::pair<std::string, std::string>>;

Entries read_key_values(std::string_view text) {
  Entries out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "line " + std::to_string(n);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!out.emplace(key, std::make_pair(trim(body.substr(eq + 1)), where)).second) {
      throw ConfigError(where + ": key '" + key + "' repeated");
    }
  }
  return out;
}

Entries read_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  Entries out;
  for (const auto& [key, value] : j.items()) {
    std::string text_value;
    if (value.is_string()) {
      text_value = value.get<std::string>();
    } else if (value.is_number() || value.is_boolean()) {
      text_value = value.dump();
    } else {
      throw ConfigError("key '" + key + "' must hold a string, number or boolean");
    }
    out.emplace(key, std::make_pair(std::move(text_value), "key '" + key + "'"));
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset is required");
  if (outer_folds < 2 || inner_folds < 2) throw ConfigError("outer_folds and inner_folds must be at least 2");
  experiment.validate();
}

ExperimentConfig parse_config(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool is_json = first != std::string_view::npos && text[first] == '{';
  const Entries entries = is_json ? read_json(text) : read_key_values(text);
  ExperimentConfig config;
  for (const auto& [key, entry] : entries) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError(entry.second + ": unknown key '" + key + "'");
    try {
      it->set(config, entry.first);
    } catch (const ConfigError& e) {
      throw ConfigError(entry.second + ": " + e.what());
    }
  }
  if (!entries.count("num_classes")) config.experiment.model.num_classes = eval::task_classes(config.experiment.task);
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  json j = json::object();
  for (const auto& f : fields()) j[std::string(f.key)] = f.get(config);
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::uint64_t h = fnv1a(config_to_json(config).dump());
  char out[9];
  std::snprintf(out, sizeof out, "%08x", static_cast<unsigned>((h >> 32) ^ (h & 0xffffffffULL)));
  return out;
}

std::filesystem::path resolve_data_path(const std::string& path) {
  const std::filesystem::path p(path);
  const char* root = std::getenv("GRAVAMEN_DATA_DIR");
  if (p.is_absolute() || root == nullptr || *root == '\0') return p;
  return std::filesystem::path(root) / p;
}

}  // namespace gravamen::cli
