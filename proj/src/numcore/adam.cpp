#include "gravamen/numcore/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "gravamen/error.hpp"

namespace gravamen::num {

Adam::Adam(const ParamStore& params, AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw std::invalid_argument("adam: betas must lie in [0,1)");
  }
  for (const auto& t : params.tensors()) {
    m_.emplace_back(t.shape(), 0.0);
    v_.emplace_back(t.shape(), 0.0);
  }
}

void Adam::step(ParamStore& params, const Gradients& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("adam: parameter/gradient count does not match optimizer state");
  }
  ++step_;
  const auto t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    auto w = params.at(i).data();
    const auto g = grads.per_param[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    if (g.size() != w.size()) throw std::invalid_argument("adam: gradient shape mismatch for " + params.name(i));
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      w[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
    }
    if (!params.at(i).all_finite()) throw NumericError("adam: parameter " + params.name(i) + " became non-finite");
  }
}

}  // namespace gravamen::num
