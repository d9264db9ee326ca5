#include "gravamen/corpus/tokenizer.hpp"

#include <cctype>

namespace gravamen::corpus {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }
bool is_eyes(char c) { return c == ':' || c == ';' || c == '=' || c == '8'; }
bool is_nose(char c) { return c == '-' || c == 'o' || c == '\'' || c == '^'; }
bool is_mouth(char c) {
  switch (c) {
    case ')': case '(': case ']': case '[': case 'd': case 'p': case '/': case '\\':
    case '|': case '}': case '{': case '@': case '*': case '3': case 'o': case 's': case 'x':
      return true;
    default:
      return false;
  }
}
bool is_reverse_mouth(char c) {
  return c == ')' || c == '(' || c == ']' || c == '[' || c == '/' || c == '\\' || c == '|' || c == '{' ||
         c == '}';
}

bool boundary_at(std::string_view s, std::size_t pos) {
  return pos >= s.size() || !is_word_byte(static_cast<unsigned char>(s[pos]));
}

// Length of the emoticon starting at `pos`, or 0. Emoticons must not run into a word.
std::size_t match_emoticon(std::string_view s, std::size_t pos) {
  const std::size_t n = s.size();
  if (pos + 1 < n && s[pos] == '<' && s[pos + 1] == '3' && boundary_at(s, pos + 2)) return 2;
  if (pos < n && is_eyes(s[pos])) {
    std::size_t i = pos + 1;
    if (i < n && is_nose(s[i]) && i + 1 < n && is_mouth(s[i + 1])) ++i;
    if (i < n && is_mouth(s[i])) {
      std::size_t end = i + 1;
      // repeated mouth characters: ":)))", ":-(("
      while (end < n && s[end] == s[i] && !std::isalnum(static_cast<unsigned char>(s[i]))) ++end;
      if (boundary_at(s, end)) return end - pos;
    }
  }
  if (pos < n && is_reverse_mouth(s[pos])) {
    std::size_t i = pos + 1;
    if (i < n && is_nose(s[i]) && i + 1 < n && is_eyes(s[i + 1])) ++i;
    if (i < n && is_eyes(s[i]) && boundary_at(s, i + 1)) {
      // "(8" style would swallow numbers like "(8": require a non-digit eye for the short form.
      if (s[i] == '8' && i == pos + 1) return 0;
      return i + 1 - pos;
    }
  }
  return 0;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::size_t word_end(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_word_byte(c)) {
      ++i;
    } else if (c == '\'' && i > pos && i + 1 < s.size() && is_word_byte(static_cast<unsigned char>(s[i + 1]))) {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

void tokenize_chunk(std::string_view chunk, std::vector<std::string>& out) {
  if (starts_with(chunk, "http://") || starts_with(chunk, "https://") || starts_with(chunk, "www.")) {
    out.emplace_back(kUrlToken);
    return;
  }
  std::size_t i = 0;
  while (i < chunk.size()) {
    const char c = chunk[i];
    const bool word_follows = i + 1 < chunk.size() && is_word_byte(static_cast<unsigned char>(chunk[i + 1]));
    if (c == '@' && word_follows) {
      i = word_end(chunk, i + 1);
      out.emplace_back(kUserToken);
      continue;
    }
    if (const std::size_t len = match_emoticon(chunk, i); len > 0) {
      out.emplace_back(chunk.substr(i, len));
      i += len;
      continue;
    }
    if (c == '#' && word_follows) {
      const std::size_t end = word_end(chunk, i + 1);
      out.emplace_back(chunk.substr(i, end - i));
      i = end;
      continue;
    }
    if (is_word_byte(static_cast<unsigned char>(c))) {
      const std::size_t end = word_end(chunk, i);
      out.emplace_back(chunk.substr(i, end - i));
      i = end;
      continue;
    }
    out.emplace_back(1, c);
    ++i;
  }
}

}  // namespace

bool is_emoticon(std::string_view token) {
  std::string lowered(token);
  for (auto& ch : lowered) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return !lowered.empty() && match_emoticon(lowered, 0) == lowered.size();
}

std::vector<std::string> preprocess(std::string_view raw_text) {
  std::string lowered(raw_text);
  for (auto& ch : lowered) {
    const auto u = static_cast<unsigned char>(ch);
    if (u < 0x80) ch = static_cast<char>(std::tolower(u));
  }
  std::vector<std::string> tokens;
  const std::string_view text(lowered);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) tokenize_chunk(text.substr(i, j - i), tokens);
    i = j;
  }
  return tokens;
}

}  // namespace gravamen::corpus
