#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gravamen::corpus {

inline constexpr std::string_view kUserToken = "<USER>";
inline constexpr std::string_view kUrlToken = "<URL>";

// Tweet-aware tokenization: ASCII-lowercases, replaces @-mentions with <USER> and URLs with <URL>,
// keeps emoticons and hashtags as single tokens, splits remaining punctuation into
// one-character tokens. Bytes >= 0x80 are treated as word characters so UTF-8 text survives.
std::vector<std::string> preprocess(std::string_view raw_text);

// Whether `token` is one of the emoticons the tokenizer protects.
bool is_emoticon(std::string_view token);

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

}  // namespace gravamen::corpus
