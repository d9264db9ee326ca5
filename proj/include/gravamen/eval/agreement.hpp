#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gravamen::eval {

// counts[i][j] = annotators that put item i in category j.
using CategoryCounts = std::vector<std::vector<std::size_t>>;

CategoryCounts category_counts(std::span<const std::vector<int>> item_labels, std::size_t categories);

// Fleiss' kappa. Every item needs the same number n >= 2 of ratings. When chance agreement is 1
// the result is 1 if observed agreement is also 1; otherwise NumericError. Ragged or empty input
// throws std::invalid_argument.
double fleiss_kappa(const CategoryCounts& counts);

// Strict majority of three labels, or nullopt when all three differ and the item needs
// adjudication. Throws std::invalid_argument unless exactly three labels are given.
std::optional<int> resolve_ties(std::span<const int> labels);

struct AgreementReport {
  double kappa = 0.0;
  CategoryCounts counts;
  std::vector<std::size_t> ties;  // items needing adjudication
};

AgreementReport agreement(std::span<const std::vector<int>> item_labels, std::size_t categories);

}  // namespace gravamen::eval
