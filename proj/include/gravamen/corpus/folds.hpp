#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gravamen::corpus {

struct InnerSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Nested cross-validation assignment over document indices [0, corpus_size).
// All index lists are sorted ascending.
struct FoldPlan {
  std::uint64_t seed = 0;
  std::size_t corpus_size = 0;
  std::vector<std::vector<std::size_t>> outer_test;
  std::vector<std::vector<InnerSplit>> inner;  // [outer fold][inner fold]

  std::size_t outer_folds() const { return outer_test.size(); }
  std::vector<std::size_t> outer_train(std::size_t fold) const;

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

bool operator==(const InnerSplit& a, const InnerSplit& b);

// Stratified K-way partition of `indices` by `keys[index]`. Within each class the members are
// shuffled with `seed`; the concatenated class lists are dealt round-robin over a seeded fold
// order, so each fold's class counts are floor/ceil of the proportional share and fold sizes
// differ by at most one. Throws std::invalid_argument if any class has fewer than `folds` members.
std::vector<std::vector<std::size_t>> stratified_partition(std::span<const std::size_t> indices,
                                                           std::span<const int> keys, std::size_t folds,
                                                           std::uint64_t seed);

// `keys` holds one stratification key per document (e.g. severity label id).
FoldPlan make_folds(std::span<const int> keys, std::size_t outer = 10, std::size_t inner = 3,
                    std::uint64_t seed = 0);

// JSON round trip used by run directories.
std::string fold_plan_to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const std::string& text);

}  // namespace gravamen::corpus
