#include "gravamen/numcore/tape.hpp"

#include <stdexcept>
#include <string>

#include "gravamen/error.hpp"

namespace gravamen::num {

Var Tape::constant(Tensor value) { return record("constant", std::move(value), false, nullptr); }

Var Tape::param(const ParamStore& store, ParamId id) {
  Var v = record("param", store[id], true, nullptr);
  nodes_.back().param = static_cast<std::ptrdiff_t>(id.index);
  return v;
}

Var Tape::append(std::string_view op, Tensor value, bool needs_grad) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by op '" + std::string(op) + "' with shape " +
                       to_string(value.shape()));
  }
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

Gradients Tape::backward(Var loss, const ParamStore& store) {
  if (!track_) throw std::logic_error("backward on a tape that does not track gradients");
  if (loss.value().size() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " + to_string(loss.shape()));
  }
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  Gradients out;
  out.per_param.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) out.per_param.emplace_back(store.at(i).shape(), 0.0);

  grad(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.needs_grad) continue;
    if (n.param >= 0) {
      auto target = out.per_param.at(static_cast<std::size_t>(n.param)).data();
      const auto g = n.grad.data();
      for (std::size_t k = 0; k < target.size(); ++k) target[k] += g[k];
    } else if (n.backward) {
      n.backward(*this, n.grad);
    }
  }
  return out;
}

}  // namespace gravamen::num
