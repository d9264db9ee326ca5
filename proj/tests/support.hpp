#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gravamen/corpus/document.hpp"
#include "gravamen/numcore/params.hpp"

namespace gravamen::testing {

// Redraws every parameter for a gradient check: matrices N(0, 1/fan_in), layer-norm gains
// 1 + N(0, 0.1^2), everything else N(0, 1). The initial scale leaves many gradient entries
// below the central-difference noise floor (about 1e-11 absolute at step 1e-5).
inline void conditioned_point(num::ParamStore& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& t = store.at(i);
    const std::string& name = store.name(i);
    const bool gain = name.ends_with(".gamma");
    const bool lookup = name.ends_with(".table") || name.ends_with(".positions") || name.ends_with(".cls");
    const double sd = gain ? 0.1 : (t.rank() == 2 && !lookup ? 1.0 / std::sqrt(static_cast<double>(t.dim(0))) : 1.0);
    for (double& v : t.data()) v = (gain ? 1.0 : 0.0) + sd * nd(rng);
  }
}

// Complaints whose severity is marked by one keyword ("cue0".."cue3") among filler words. With
// `non_complaints` every fifth document is a non-complaint marked by "cue4".
inline corpus::Corpus keyword_documents(std::size_t n, std::uint64_t seed, bool non_complaints = false) {
  std::mt19937_64 rng(seed);
  const std::size_t classes = non_complaints ? 5 : 4;
  corpus::Corpus out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& d = out[i];
    d.id = "doc" + std::to_string(i);
    const std::size_t label = i % classes;
    const std::size_t len = 4 + rng() % 8;
    for (std::size_t t = 0; t < len; ++t) d.tokens.push_back("w" + std::to_string(rng() % 30));
    d.tokens[rng() % len] = "cue" + std::to_string(label);
    for (const auto& t : d.tokens) d.raw_text += (d.raw_text.empty() ? "" : " ") + t;
    if (label == 4) {
      d.binary_label = corpus::BinaryLabel::NonComplaint;
    } else {
      d.binary_label = corpus::BinaryLabel::Complaint;
      d.severity_label = static_cast<corpus::SeverityLabel>(label);
    }
  }
  return out;
}

// Complaints only, `counts[c]` documents of severity c.
inline corpus::Corpus severity_corpus(const std::vector<std::size_t>& counts) {
  corpus::Corpus out;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      corpus::Document d;
      d.id = "s" + std::to_string(c) + "_" + std::to_string(i);
      d.tokens = {"tok" + std::to_string(i % 7)};
      d.raw_text = d.tokens.front();
      d.binary_label = corpus::BinaryLabel::Complaint;
      d.severity_label = static_cast<corpus::SeverityLabel>(c);
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace gravamen::testing
