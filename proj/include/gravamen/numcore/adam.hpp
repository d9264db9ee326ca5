#pragma once

#include <cstdint>
#include <vector>

#include "gravamen/numcore/params.hpp"

namespace gravamen::num {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Moments mirror the parameter shapes of the store it was built for.
class Adam {
 public:
  Adam(const ParamStore& params, AdamConfig config);

  void step(ParamStore& params, const Gradients& grads);

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t step_ = 0;
};

}  // namespace gravamen::num
