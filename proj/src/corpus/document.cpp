#include "gravamen/corpus/document.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "gravamen/corpus/tokenizer.hpp"
#include "gravamen/error.hpp"

namespace gravamen::corpus {

using nlohmann::json;

std::string_view to_string(BinaryLabel label) {
  return label == BinaryLabel::Complaint ? "complaint" : "non_complaint";
}

std::string_view to_string(SeverityLabel label) {
  switch (label) {
    case SeverityLabel::NoExplicitReproach: return "no_explicit_reproach";
    case SeverityLabel::Disapproval: return "disapproval";
    case SeverityLabel::Accusation: return "accusation";
    case SeverityLabel::Blame: return "blame";
    case SeverityLabel::NoComplaintSeverity: return "no_complaint_severity";
  }
  return "?";
}

std::string_view display_name(SeverityLabel label) {
  switch (label) {
    case SeverityLabel::NoExplicitReproach: return "No Explicit Reproach";
    case SeverityLabel::Disapproval: return "Disapproval";
    case SeverityLabel::Accusation: return "Accusation";
    case SeverityLabel::Blame: return "Blame";
    case SeverityLabel::NoComplaintSeverity: return "No Complaint Severity";
  }
  return "?";
}

std::string_view display_name(BinaryLabel label) {
  return label == BinaryLabel::Complaint ? "Complaint" : "Non-complaint";
}

std::optional<BinaryLabel> parse_binary(std::string_view text) {
  if (text == "complaint") return BinaryLabel::Complaint;
  if (text == "non_complaint") return BinaryLabel::NonComplaint;
  return std::nullopt;
}

std::optional<SeverityLabel> parse_severity(std::string_view text) {
  for (int i = 0; i < 5; ++i) {
    const auto label = static_cast<SeverityLabel>(i);
    if (text == to_string(label)) return label;
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

std::optional<std::string> optional_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail(line, std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

SeverityLabel severity_or_fail(const std::string& text, std::size_t line) {
  auto label = parse_severity(text);
  if (!label) fail(line, "unknown severity label '" + text + "'");
  return *label;
}

Document parse_record(const std::string& text, std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(line, std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) fail(line, "record must be a JSON object");
  static const std::unordered_set<std::string> known = {"id", "text", "binary", "severity", "annotators", "domain"};
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) fail(line, "unknown field '" + key + "'");
  }

  Document doc;
  auto id = optional_string(obj, "id", line);
  if (!id || id->empty()) fail(line, "missing or empty 'id'");
  doc.id = *id;
  auto raw = optional_string(obj, "text", line);
  if (!raw) fail(line, "missing 'text'");
  doc.raw_text = *raw;
  doc.tokens = preprocess(doc.raw_text);
  if (doc.tokens.empty()) fail(line, "text of document '" + doc.id + "' has no tokens");

  if (auto b = optional_string(obj, "binary", line)) {
    doc.binary_label = parse_binary(*b);
    if (!doc.binary_label) fail(line, "unknown binary label '" + *b + "'");
  }
  if (auto s = optional_string(obj, "severity", line)) doc.severity_label = severity_or_fail(*s, line);
  if (doc.severity_label == SeverityLabel::NoComplaintSeverity && doc.binary_label != BinaryLabel::NonComplaint) {
    fail(line, "severity 'no_complaint_severity' requires binary 'non_complaint'");
  }
  if (doc.binary_label == BinaryLabel::NonComplaint && doc.severity_label &&
      doc.severity_label != SeverityLabel::NoComplaintSeverity) {
    fail(line, "non-complaint document carries complaint severity '" +
                   std::string(to_string(*doc.severity_label)) + "'");
  }

  if (auto it = obj.find("annotators"); it != obj.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 3) fail(line, "'annotators' must be an array of exactly 3 labels");
    std::array<SeverityLabel, 3> labels{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*it)[i].is_string()) fail(line, "annotator labels must be strings");
      labels[i] = severity_or_fail((*it)[i].get<std::string>(), line);
    }
    doc.annotator_labels = labels;
  }
  doc.domain = optional_string(obj, "domain", line);
  return doc;
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    Document doc = parse_record(text, line);
    if (!ids.insert(doc.id).second) fail(line, "duplicate id '" + doc.id + "'");
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus) {
    json obj = json::object();
    obj["id"] = doc.id;
    obj["text"] = doc.raw_text;
    obj["binary"] = doc.binary_label ? json(std::string(to_string(*doc.binary_label))) : json(nullptr);
    obj["severity"] = doc.severity_label ? json(std::string(to_string(*doc.severity_label))) : json(nullptr);
    if (doc.annotator_labels) {
      json arr = json::array();
      for (auto l : *doc.annotator_labels) arr.push_back(std::string(to_string(l)));
      obj["annotators"] = arr;
    } else {
      obj["annotators"] = nullptr;
    }
    obj["domain"] = doc.domain ? json(*doc.domain) : json(nullptr);
    out << obj.dump() << '\n';
  }
}

ClassDistribution class_distribution(const Corpus& corpus, LabelKind kind) {
  ClassDistribution dist;
  dist.total = corpus.size();
  if (kind == LabelKind::Binary) {
    std::array<std::size_t, 2> counts{};
    for (const auto& doc : corpus) {
      if (!doc.binary_label) throw DataError("document '" + doc.id + "' has no binary label");
      ++counts[static_cast<std::size_t>(*doc.binary_label)];
    }
    for (std::size_t c = 0; c < 2; ++c) {
      dist.classes.push_back({std::string(display_name(static_cast<BinaryLabel>(c))), counts[c], 0.0});
    }
  } else {
    std::array<std::size_t, 5> counts{};
    for (const auto& doc : corpus) {
      if (!doc.severity_label) throw DataError("document '" + doc.id + "' has no severity label");
      ++counts[static_cast<std::size_t>(*doc.severity_label)];
    }
    const std::size_t shown = counts[4] > 0 ? 5 : 4;
    for (std::size_t c = 0; c < shown; ++c) {
      dist.classes.push_back({std::string(display_name(static_cast<SeverityLabel>(c))), counts[c], 0.0});
    }
  }
  for (auto& share : dist.classes) {
    share.percent = dist.total ? 100.0 * static_cast<double>(share.count) / static_cast<double>(dist.total) : 0.0;
  }
  return dist;
}

}  // namespace gravamen::corpus
