#include "gravamen/eval/agreement.hpp"

#include <stdexcept>
#include <string>

#include "gravamen/error.hpp"

namespace gravamen::eval {

CategoryCounts category_counts(std::span<const std::vector<int>> item_labels, std::size_t categories) {
  CategoryCounts out;
  out.reserve(item_labels.size());
  for (const auto& labels : item_labels) {
    std::vector<std::size_t> row(categories, 0);
    for (int l : labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= categories) {
        throw std::invalid_argument("annotation label " + std::to_string(l) + " outside the category set");
      }
      ++row[static_cast<std::size_t>(l)];
    }
    out.push_back(std::move(row));
  }
  return out;
}

double fleiss_kappa(const CategoryCounts& counts) {
  if (counts.empty()) throw std::invalid_argument("no items");
  const std::size_t k = counts.front().size();
  std::size_t n = 0;
  for (auto v : counts.front()) n += v;
  if (n < 2) throw std::invalid_argument("each item needs at least two ratings");
  std::vector<double> totals(k, 0.0);
  double p_bar = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& row = counts[i];
    if (row.size() != k) throw std::invalid_argument("items list different category sets");
    std::size_t raters = 0;
    double sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      raters += row[j];
      sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      totals[j] += static_cast<double>(row[j]);
    }
    if (raters != n) {
      throw std::invalid_argument("item " + std::to_string(i) + " has " + std::to_string(raters) +
                                  " ratings, expected " + std::to_string(n));
    }
    const double nd = static_cast<double>(n);
    p_bar += (sq - nd) / (nd * (nd - 1.0));
  }
  const double items = static_cast<double>(counts.size());
  p_bar /= items;
  double p_e = 0.0;
  for (double t : totals) {
    const double pj = t / (items * static_cast<double>(n));
    p_e += pj * pj;
  }
  if (p_e == 1.0) {
    if (p_bar == 1.0) return 1.0;
    throw NumericError("Fleiss' kappa undefined: chance agreement is 1 but ratings disagree");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

std::optional<int> resolve_ties(std::span<const int> labels) {
  if (labels.size() != 3) {
    throw std::invalid_argument("tie resolution needs exactly three labels, got " + std::to_string(labels.size()));
  }
  if (labels[0] == labels[1] || labels[0] == labels[2]) return labels[0];
  if (labels[1] == labels[2]) return labels[1];
  return std::nullopt;
}

AgreementReport agreement(std::span<const std::vector<int>> item_labels, std::size_t categories) {
  AgreementReport r;
  r.counts = category_counts(item_labels, categories);
  r.kappa = fleiss_kappa(r.counts);
  for (std::size_t i = 0; i < item_labels.size(); ++i) {
    if (item_labels[i].size() == 3 && !resolve_ties(item_labels[i])) r.ties.push_back(i);
  }
  return r;
}

}  // namespace gravamen::eval
