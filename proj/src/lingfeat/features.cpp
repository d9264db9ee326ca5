#include "gravamen/lingfeat/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "gravamen/error.hpp"

namespace gravamen::lingfeat {

using nlohmann::json;

namespace {

constexpr std::size_t kPositiveCategory = 6;
constexpr std::size_t kNegativeCategory = 7;

const char* const kBuiltinLexicon = R"lex({
  "anger": ["angry", "anger", "furious", "mad", "rage", "outraged", "livid", "annoyed", "annoying", "irritated",
            "pissed", "hate", "hateful", "infuriating", "fuming", "unacceptable", "ridiculous", "sick", "fed"],
  "disgust": ["disgusting", "disgusted", "gross", "nasty", "awful", "vile", "revolting", "horrible", "filthy",
              "yuck", "shameful", "pathetic", "appalling", "terrible", "rotten"],
  "fear": ["afraid", "scared", "fear", "worried", "worry", "anxious", "nervous", "terrified", "panic",
           "dangerous", "unsafe", "risk", "frightened", "concerned", "dread"],
  "joy": ["happy", "glad", "love", "great", "awesome", "excellent", "wonderful", "thanks", "thank", "delighted",
          "enjoy", "amazing", "fantastic", "pleased", "yay", "good", ":)", ":-)", ":d", "<3"],
  "sadness": ["sad", "unhappy", "disappointed", "disappointing", "upset", "sorry", "miss", "lost", "crying",
              "depressed", "unfortunately", "heartbroken", "regret", "lonely", ":(", ":-("],
  "surprise": ["surprised", "surprise", "shocked", "shocking", "unbelievable", "unexpected", "wow", "omg",
               "suddenly", "astonished", "amazed", "incredible", "what"],
  "positive": ["good", "great", "love", "excellent", "awesome", "thanks", "thank", "happy", "best", "nice",
               "perfect", "amazing", "fantastic", "helpful", "fast", "friendly", "recommend", ":)", ":-)", "<3"],
  "negative": ["bad", "worst", "terrible", "awful", "hate", "broken", "late", "delayed", "never", "poor",
               "rude", "slow", "refund", "useless", "disappointed", "angry", "wrong", "failed", "fail",
               "#fail", "cancelled", "problem", "issue", ":(", ":-("]
})lex";

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

EmotionLexicon EmotionLexicon::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed lexicon JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("lexicon must be a JSON object");
  EmotionLexicon lex;
  for (std::size_t c = 0; c < kCategories.size(); ++c) {
    const std::string key(kCategories[c]);
    auto it = j.find(key);
    if (it == j.end() || !it->is_array() || it->empty()) {
      throw DataError("lexicon category '" + key + "' is missing or empty");
    }
    for (const auto& w : *it) {
      if (!w.is_string()) throw DataError("lexicon category '" + key + "' holds a non-string entry");
      std::string word = w.get<std::string>();
      for (auto& ch : word) {
        const auto u = static_cast<unsigned char>(ch);
        if (u < 0x80) ch = static_cast<char>(std::tolower(u));
      }
      lex.words_[c].insert(std::move(word));
    }
  }
  return lex;
}

EmotionLexicon EmotionLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

EmotionLexicon EmotionLexicon::builtin() { return from_json(kBuiltinLexicon); }

bool EmotionLexicon::in_category(std::size_t category, const std::string& token) const {
  return words_.at(category).contains(token);
}

TopicClusters::TopicClusters(std::unordered_map<std::string, std::size_t> assignment)
    : assignment_(std::move(assignment)) {
  for (const auto& [token, id] : assignment_) {
    if (id >= kTopicDim) throw DataError("cluster id " + std::to_string(id) + " for '" + token + "' is not below 200");
  }
}

TopicClusters TopicClusters::parse(std::istream& in) {
  std::unordered_map<std::string, std::size_t> assignment;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto tab = text.find('\t');
    if (tab == std::string::npos || tab == 0) fail_line(line, "expected token<TAB>cluster_id");
    const std::string id_text = text.substr(tab + 1);
    std::size_t consumed = 0;
    unsigned long id = 0;
    try {
      id = std::stoul(id_text, &consumed);
    } catch (const std::exception&) {
      fail_line(line, "cluster id '" + id_text + "' is not an integer");
    }
    if (consumed != id_text.size()) fail_line(line, "cluster id '" + id_text + "' is not an integer");
    if (id >= kTopicDim) fail_line(line, "cluster id " + id_text + " is not below 200");
    assignment[text.substr(0, tab)] = id;
  }
  return TopicClusters(std::move(assignment));
}

TopicClusters TopicClusters::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cluster file " + path.string());
  return parse(in);
}

void TopicClusters::write(std::ostream& out) const {
  std::map<std::string, std::size_t> sorted(assignment_.begin(), assignment_.end());
  for (const auto& [token, id] : sorted) out << token << '\t' << id << '\n';
}

long TopicClusters::cluster_of(const std::string& token) const {
  auto it = assignment_.find(token);
  return it == assignment_.end() ? -1 : static_cast<long>(it->second);
}

TopicClusters build_topic_clusters(const corpus::Corpus& corpus, std::uint64_t seed, std::size_t max_tokens,
                                   std::size_t iterations) {
  std::map<std::string, std::size_t> freq;
  for (const auto& d : corpus)
    for (const auto& t : d.tokens) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_tokens) ranked.resize(max_tokens);
  const std::size_t n = ranked.size();
  if (n == 0) return TopicClusters();

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(ranked[i].first, i);

  // Sparse document-level co-occurrence rows.
  std::vector<std::map<std::size_t, double>> rows(n);
  for (const auto& d : corpus) {
    std::vector<std::size_t> present;
    for (const auto& t : d.tokens) {
      auto it = index.find(t);
      if (it != index.end()) present.push_back(it->second);
    }
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    for (std::size_t a : present)
      for (std::size_t b : present) rows[a][b] += 1.0;
  }
  for (auto& row : rows) {
    double norm = 0.0;
    for (const auto& [_, v] : row) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& [_, v] : row) v /= norm;
  }

  const std::size_t k = std::min(kTopicDim, n);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), std::size_t{0});
  std::shuffle(seeds.begin(), seeds.end(), rng);
  std::vector<std::vector<double>> centroids(k, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < k; ++c)
    for (const auto& [j, v] : rows[seeds[c]]) centroids[c][j] = v;

  std::vector<std::size_t> assign(n, 0);
  for (std::size_t iter = 0; iter < iterations; ++iter) {
    std::vector<double> sq(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
      for (double v : centroids[c]) sq[c] += v * v;
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double dot = 0.0;
        for (const auto& [j, v] : rows[i]) dot += v * centroids[c][j];
        const double dist = sq[c] - 2.0 * dot;
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
    }
    if (!changed) break;
    std::vector<std::size_t> members(k, 0);
    std::vector<std::vector<double>> next(k, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      ++members[assign[i]];
      for (const auto& [j, v] : rows[i]) next[assign[i]][j] += v;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c] == 0) continue;  // empty cluster keeps its centroid
      for (auto& v : next[c]) v /= static_cast<double>(members[c]);
      centroids[c] = std::move(next[c]);
    }
  }
  std::unordered_map<std::string, std::size_t> assignment;
  for (std::size_t i = 0; i < n; ++i) assignment.emplace(ranked[i].first, assign[i]);
  return TopicClusters(std::move(assignment));
}

std::array<double, kEmotionDim> emotion_vector(std::span<const std::string> tokens, const EmotionLexicon& lexicon) {
  std::array<double, kEmotionDim> out{};
  if (tokens.empty()) {
    out[kNeutral] = 1.0;
    return out;
  }
  std::array<double, 6> hits{};
  double pos = 0.0;
  double neg = 0.0;
  for (const auto& t : tokens) {
    for (std::size_t e = 0; e < 6; ++e) hits[e] += lexicon.in_category(e, t) ? 1.0 : 0.0;
    pos += lexicon.in_category(kPositiveCategory, t) ? 1.0 : 0.0;
    neg += lexicon.in_category(kNegativeCategory, t) ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(tokens.size());
  for (std::size_t e = 0; e < 6; ++e) out[kAnger + e] = hits[e] / n;
  const double mass = pos + neg + 1.0;
  out[kPositive] = pos / mass;
  out[kNegative] = neg / mass;
  out[kNeutral] = 1.0 / mass;
  return out;
}

std::array<double, kTopicDim> topic_vector(std::span<const std::string> tokens, const TopicClusters& clusters) {
  std::array<double, kTopicDim> out{};
  if (tokens.empty()) return out;
  for (const auto& t : tokens) {
    const long c = clusters.cluster_of(t);
    if (c >= 0) out[static_cast<std::size_t>(c)] += 1.0;
  }
  const double n = static_cast<double>(tokens.size());
  for (auto& v : out) v /= n;
  return out;
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::None: return "none";
    case FeatureMode::Emo: return "emo";
    case FeatureMode::Top: return "top";
    case FeatureMode::EmoTop: return "emo+top";
  }
  return "?";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "none") return FeatureMode::None;
  if (text == "emo") return FeatureMode::Emo;
  if (text == "top") return FeatureMode::Top;
  if (text == "emo+top") return FeatureMode::EmoTop;
  throw std::invalid_argument("unknown feature mode '" + std::string(text) + "' (expected none, emo, top, emo+top)");
}

std::size_t feature_dim(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::None: return 0;
    case FeatureMode::Emo: return kEmotionDim;
    case FeatureMode::Top: return kTopicDim;
    case FeatureMode::EmoTop: return kEmotionDim + kTopicDim;
  }
  return 0;
}

std::vector<double> concat_features(const std::array<double, kEmotionDim>& emotion,
                                    const std::array<double, kTopicDim>& topic, FeatureMode mode) {
  std::vector<double> out;
  switch (mode) {
    case FeatureMode::Emo:
      out.assign(emotion.begin(), emotion.end());
      break;
    case FeatureMode::Top:
      out.assign(topic.begin(), topic.end());
      break;
    case FeatureMode::EmoTop:
      out.assign(emotion.begin(), emotion.end());
      out.insert(out.end(), topic.begin(), topic.end());
      break;
    case FeatureMode::None:
      throw std::invalid_argument("concat_features: feature mode 'none' selects no features");
  }
  return out;
}

LinguisticFeatures extract(const corpus::Document& doc, const EmotionLexicon& lexicon, const TopicClusters& clusters) {
  return LinguisticFeatures{emotion_vector(doc.tokens, lexicon), topic_vector(doc.tokens, clusters)};
}

FeatureTable parse_feature_table(std::istream& in) {
  FeatureTable table;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(text);
      const auto id = j.at("id").get<std::string>();
      const auto emo = j.at("emotion").get<std::vector<double>>();
      const auto top = j.at("topic").get<std::vector<double>>();
      if (emo.size() != kEmotionDim) fail_line(line, "emotion vector must have 9 entries");
      if (top.size() != kTopicDim) fail_line(line, "topic vector must have 200 entries");
      LinguisticFeatures f;
      std::copy(emo.begin(), emo.end(), f.emotion.begin());
      std::copy(top.begin(), top.end(), f.topic.begin());
      for (double v : emo)
        if (!(v >= 0.0 && v <= 1.0)) fail_line(line, "emotion entries must lie in [0,1]");
      for (double v : top)
        if (!(v >= 0.0 && v <= 1.0)) fail_line(line, "topic entries must lie in [0,1]");
      if (!table.emplace(id, f).second) fail_line(line, "duplicate id '" + id + "'");
    } catch (const json::exception& e) {
      fail_line(line, std::string("malformed feature record: ") + e.what());
    }
  }
  return table;
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file " + path.string());
  return parse_feature_table(in);
}

void write_feature_table(const corpus::Corpus& corpus, const std::vector<LinguisticFeatures>& features,
                         std::ostream& out) {
  if (corpus.size() != features.size()) throw std::invalid_argument("write_feature_table: size mismatch");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    json j;
    j["id"] = corpus[i].id;
    j["emotion"] = features[i].emotion;
    j["topic"] = features[i].topic;
    out << j.dump() << '\n';
  }
}

}  // namespace gravamen::lingfeat
