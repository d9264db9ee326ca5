#include "gravamen/corpus/vocabulary.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "gravamen/corpus/tokenizer.hpp"

namespace gravamen::corpus {

Vocabulary::Vocabulary() {
  push("<PAD>");
  push("<UNK>");
  push(std::string(kUserToken));
  push(std::string(kUrlToken));
}

void Vocabulary::push(std::string token) {
  if (ids_.contains(token)) return;
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.push(t);
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;  // token separator
    h *= 1099511628211ull;
  }
  return h;
}

Vocabulary build_vocab(std::span<const Document* const> docs, std::size_t min_freq) {
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be at least 1");
  if (docs.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const Document* d : docs) {
    for (const auto& t : d->tokens) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, count] : freq) {
    if (count >= min_freq) kept.emplace_back(token, count);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> ordered;
  ordered.reserve(kept.size());
  for (auto& [token, _] : kept) ordered.push_back(token);
  return Vocabulary::from_tokens(ordered);
}

Vocabulary build_vocab(const Corpus& corpus, std::size_t min_freq) {
  std::vector<const Document*> docs;
  docs.reserve(corpus.size());
  for (const auto& d : corpus) docs.push_back(&d);
  return build_vocab(docs, min_freq);
}

EncodedSequence encode(std::span<const std::string> tokens, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("encode: max_len must be at least 1");
  EncodedSequence seq;
  seq.length = std::min(tokens.size(), max_len);
  seq.ids.assign(max_len, kPadId);
  for (std::size_t i = 0; i < seq.length; ++i) seq.ids[i] = vocab.id(tokens[i]);
  return seq;
}

}  // namespace gravamen::corpus
