#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gravamen/corpus/document.hpp"

namespace gravamen::corpus {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kUserId = 2;
inline constexpr int kUrlId = 3;

class Vocabulary {
 public:
  // Only the reserved tokens.
  Vocabulary();

  // Reserved ids first, then `tokens` in the given order; duplicates are ignored.
  static Vocabulary from_tokens(std::span<const std::string> tokens);

  int id(std::string_view token) const;  // UNK when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // FNV-1a over tokens in id order; identifies the vocabulary inside checkpoints.
  std::uint64_t hash() const;

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// Tokens occurring at least `min_freq` times, ordered by descending frequency then
// lexicographically. Throws std::invalid_argument for min_freq < 1 or an empty corpus.
Vocabulary build_vocab(const Corpus& corpus, std::size_t min_freq = 1);
Vocabulary build_vocab(std::span<const Document* const> docs, std::size_t min_freq = 1);

struct EncodedSequence {
  std::vector<int> ids;     // exactly max_len entries, right-padded with kPadId
  std::size_t length = 0;   // real tokens kept, min(tokens, max_len)
};

EncodedSequence encode(std::span<const std::string> tokens, const Vocabulary& vocab, std::size_t max_len);
inline EncodedSequence encode(const Document& doc, const Vocabulary& vocab, std::size_t max_len) {
  return encode(doc.tokens, vocab, max_len);
}

}  // namespace gravamen::corpus
