#include "gravamen/corpus/folds.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "gravamen/error.hpp"

namespace gravamen::corpus {

bool operator==(const InnerSplit& a, const InnerSplit& b) { return a.train == b.train && a.val == b.val; }

std::vector<std::size_t> FoldPlan::outer_train(std::size_t fold) const {
  std::vector<std::size_t> train;
  train.reserve(corpus_size);
  for (std::size_t k = 0; k < outer_test.size(); ++k) {
    if (k != fold) train.insert(train.end(), outer_test[k].begin(), outer_test[k].end());
  }
  std::sort(train.begin(), train.end());
  return train;
}

std::vector<std::vector<std::size_t>> stratified_partition(std::span<const std::size_t> indices,
                                                           std::span<const int> keys, std::size_t folds,
                                                           std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_partition: need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t idx : indices) {
    if (idx >= keys.size()) throw std::out_of_range("stratified_partition: index outside key table");
    by_class[keys[idx]].push_back(idx);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> dealt;
  dealt.reserve(indices.size());
  for (auto& [key, members] : by_class) {
    if (members.size() < folds) {
      throw std::invalid_argument("class " + std::to_string(key) + " has " + std::to_string(members.size()) +
                                  " members, fewer than " + std::to_string(folds) + " folds");
    }
    std::shuffle(members.begin(), members.end(), rng);
    dealt.insert(dealt.end(), members.begin(), members.end());
  }
  std::vector<std::size_t> order(folds);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> parts(folds);
  for (std::size_t p = 0; p < dealt.size(); ++p) parts[order[p % folds]].push_back(dealt[p]);
  for (auto& part : parts) std::sort(part.begin(), part.end());
  return parts;
}

FoldPlan make_folds(std::span<const int> keys, std::size_t outer, std::size_t inner, std::uint64_t seed) {
  FoldPlan plan;
  plan.seed = seed;
  plan.corpus_size = keys.size();
  std::vector<std::size_t> all(keys.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  plan.outer_test = stratified_partition(all, keys, outer, seed);
  for (std::size_t k = 0; k < outer; ++k) {
    const auto train = plan.outer_train(k);
    auto parts = stratified_partition(train, keys, inner, seed * 1000003ull + k + 1);
    std::vector<InnerSplit> splits;
    for (std::size_t j = 0; j < inner; ++j) {
      InnerSplit s;
      s.val = parts[j];
      for (std::size_t o = 0; o < inner; ++o) {
        if (o != j) s.train.insert(s.train.end(), parts[o].begin(), parts[o].end());
      }
      std::sort(s.train.begin(), s.train.end());
      splits.push_back(std::move(s));
    }
    plan.inner.push_back(std::move(splits));
  }
  return plan;
}

std::string fold_plan_to_json(const FoldPlan& plan) {
  nlohmann::json j;
  j["seed"] = plan.seed;
  j["corpus_size"] = plan.corpus_size;
  j["outer_test"] = plan.outer_test;
  nlohmann::json inner = nlohmann::json::array();
  for (const auto& splits : plan.inner) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& s : splits) row.push_back({{"train", s.train}, {"val", s.val}});
    inner.push_back(row);
  }
  j["inner"] = inner;
  return j.dump();
}

FoldPlan fold_plan_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    FoldPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.corpus_size = j.at("corpus_size").get<std::size_t>();
    plan.outer_test = j.at("outer_test").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& row : j.at("inner")) {
      std::vector<InnerSplit> splits;
      for (const auto& s : row) {
        splits.push_back({s.at("train").get<std::vector<std::size_t>>(), s.at("val").get<std::vector<std::size_t>>()});
      }
      plan.inner.push_back(std::move(splits));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fold plan: ") + e.what());
  }
}

}  // namespace gravamen::corpus
