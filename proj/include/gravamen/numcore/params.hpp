#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gravamen/numcore/tensor.hpp"

namespace gravamen::num {

using Rng = std::mt19937_64;

struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

// Named, ordered collection of trainable tensors. Ids are dense insertion indices.
class ParamStore {
 public:
  ParamId add(std::string name, Tensor value);

  Tensor& operator[](ParamId id) { return values_.at(id.index); }
  const Tensor& operator[](ParamId id) const { return values_.at(id.index); }
  Tensor& at(std::size_t i) { return values_.at(i); }
  const Tensor& at(std::size_t i) const { return values_.at(i); }

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  // Throws std::out_of_range when absent.
  ParamId find(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t element_count() const;
  bool all_finite() const;

  const std::vector<Tensor>& tensors() const { return values_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

// Glorot-uniform matrix: U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor normal_init(Shape shape, double stddev, Rng& rng);

// Gradient per parameter, indexed like the owning ParamStore.
struct Gradients {
  std::vector<Tensor> per_param;

  const Tensor& operator[](ParamId id) const { return per_param.at(id.index); }
  std::size_t size() const { return per_param.size(); }
};

}  // namespace gravamen::num
