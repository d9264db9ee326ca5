#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gravamen::corpus {

enum class BinaryLabel { Complaint = 0, NonComplaint = 1 };

// Ordered by the face-threat the complainer undertakes; the fifth value exists only for
// non-complaints in joint (binary + severity) training.
enum class SeverityLabel {
  NoExplicitReproach = 0,
  Disapproval = 1,
  Accusation = 2,
  Blame = 3,
  NoComplaintSeverity = 4,
};

inline constexpr std::size_t kSeverityClasses = 4;
inline constexpr std::size_t kJointSeverityClasses = 5;

std::string_view to_string(BinaryLabel label);
std::string_view to_string(SeverityLabel label);
// Display names used in report tables ("No Explicit Reproach", ...).
std::string_view display_name(SeverityLabel label);
std::string_view display_name(BinaryLabel label);
std::optional<BinaryLabel> parse_binary(std::string_view text);
std::optional<SeverityLabel> parse_severity(std::string_view text);

struct Document {
  std::string id;
  std::string raw_text;
  std::vector<std::string> tokens;
  std::optional<BinaryLabel> binary_label;
  std::optional<SeverityLabel> severity_label;
  std::optional<std::array<SeverityLabel, 3>> annotator_labels;
  std::optional<std::string> domain;
};

using Corpus = std::vector<Document>;

// One JSON object per line: id, text, binary, severity, annotators, domain.
// Throws DataError naming the 1-based line for malformed JSON, unknown keys or label strings,
// missing id/text, duplicate ids, and inconsistent binary/severity pairs.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in);
void write_corpus(const Corpus& corpus, std::ostream& out);

enum class LabelKind { Severity, Binary };

struct ClassShare {
  std::string label;
  std::size_t count = 0;
  double percent = 0.0;
};

struct ClassDistribution {
  std::vector<ClassShare> classes;
  std::size_t total = 0;
};

// Severity distributions list the four severity levels, plus NoComplaintSeverity when present.
// Throws DataError when any document lacks the requested label.
ClassDistribution class_distribution(const Corpus& corpus, LabelKind kind);

}  // namespace gravamen::corpus
