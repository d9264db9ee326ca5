#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gravamen/corpus/document.hpp"

namespace gravamen::lingfeat {

inline constexpr std::size_t kEmotionDim = 9;
inline constexpr std::size_t kTopicDim = 200;

// Emotion vector layout: sentiment triple first, then the six basic emotions.
enum EmotionSlot : std::size_t {
  kPositive = 0,
  kNegative,
  kNeutral,
  kAnger,
  kDisgust,
  kFear,
  kJoy,
  kSadness,
  kSurprise,
};

struct LinguisticFeatures {
  std::array<double, kEmotionDim> emotion{};
  std::array<double, kTopicDim> topic{};
};

// Word lists for the six emotions and two polarities. Keys in files:
// anger, disgust, fear, joy, sadness, surprise, positive, negative.
class EmotionLexicon {
 public:
  static constexpr std::array<std::string_view, 8> kCategories = {
      "anger", "disgust", "fear", "joy", "sadness", "surprise", "positive", "negative"};

  // Throws DataError when a category is missing or empty.
  static EmotionLexicon from_json(std::string_view text);
  static EmotionLexicon load(const std::filesystem::path& path);
  // Small general-purpose English lexicon shipped with the library.
  static EmotionLexicon builtin();

  bool in_category(std::size_t category, const std::string& token) const;
  const std::unordered_set<std::string>& words(std::size_t category) const { return words_.at(category); }

 private:
  std::array<std::unordered_set<std::string>, 8> words_;
};

// Token -> cluster id in [0, 200).
class TopicClusters {
 public:
  TopicClusters() = default;
  explicit TopicClusters(std::unordered_map<std::string, std::size_t> assignment);

  // TSV lines `token<TAB>cluster_id`. Throws DataError with the line number on bad input.
  static TopicClusters load(const std::filesystem::path& path);
  static TopicClusters parse(std::istream& in);
  void write(std::ostream& out) const;

  // -1 when the token is unmapped.
  long cluster_of(const std::string& token) const;
  std::size_t size() const { return assignment_.size(); }
  const std::unordered_map<std::string, std::size_t>& assignment() const { return assignment_; }

 private:
  std::unordered_map<std::string, std::size_t> assignment_;
};

// Fallback when no cluster file is supplied: k-means (k = min(200, vocabulary)) over
// L2-normalized document co-occurrence count vectors of the `max_tokens` most frequent tokens.
TopicClusters build_topic_clusters(const corpus::Corpus& corpus, std::uint64_t seed,
                                   std::size_t max_tokens = 5000, std::size_t iterations = 30);

// Emotion entries are hit counts over the token count; the sentiment triple is
// (pos_hits, neg_hits, 1) / (pos_hits + neg_hits + 1).
std::array<double, kEmotionDim> emotion_vector(std::span<const std::string> tokens, const EmotionLexicon& lexicon);
// Entry c is the fraction of tokens mapped to cluster c.
std::array<double, kTopicDim> topic_vector(std::span<const std::string> tokens, const TopicClusters& clusters);

enum class FeatureMode { None, Emo, Top, EmoTop };

std::string_view to_string(FeatureMode mode);
// Accepts none, emo, top, emo+top. Throws std::invalid_argument otherwise.
FeatureMode parse_feature_mode(std::string_view text);
std::size_t feature_dim(FeatureMode mode);

// Emotion-first concatenation selected by `mode`; throws std::invalid_argument for None.
std::vector<double> concat_features(const std::array<double, kEmotionDim>& emotion,
                                    const std::array<double, kTopicDim>& topic, FeatureMode mode);

LinguisticFeatures extract(const corpus::Document& doc, const EmotionLexicon& lexicon, const TopicClusters& clusters);

// Precomputed vectors keyed by document id: JSONL {id, emotion:[9], topic:[200]}.
using FeatureTable = std::unordered_map<std::string, LinguisticFeatures>;

FeatureTable load_feature_table(const std::filesystem::path& path);
FeatureTable parse_feature_table(std::istream& in);
void write_feature_table(const corpus::Corpus& corpus, const std::vector<LinguisticFeatures>& features,
                         std::ostream& out);

}  // namespace gravamen::lingfeat
