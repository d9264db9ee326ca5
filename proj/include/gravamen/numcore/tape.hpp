#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>

#include "gravamen/numcore/params.hpp"
#include "gravamen/numcore/tensor.hpp"

namespace gravamen::num {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Ordered record of executed ops. Backward walks the record in exact reverse order,
// so every op appended before the loss contributes once per use.
class Tape {
 public:
  // Receives the upstream gradient of the node's output and accumulates into inputs via grad().
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  // An untracked tape records values only: no node needs a gradient and backward() throws.
  explicit Tape(bool track_gradients) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(const ParamStore& store, ParamId id);

  // Appends an op output. Throws NumericError if `value` holds NaN or Inf. The backward
  // function is only materialized for nodes that need a gradient.
  template <class F>
  Var record(std::string_view op, Tensor value, bool needs_grad, F&& backward) {
    needs_grad = needs_grad && track_;
    Var v = append(op, std::move(value), needs_grad);
    if (needs_grad) nodes_.back().backward = BackwardFn(std::forward<F>(backward));
    return v;
  }

  bool tracking() const { return track_; }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }
  bool needs_grad(Var v) const { return needs_grad(v.id()); }
  // Zero-initialized on first access.
  Tensor& grad(std::size_t id);

  // Reverse-mode sweep from a scalar loss. Parameters unreachable from the loss get zeros.
  Gradients backward(Var loss, const ParamStore& store);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::ptrdiff_t param = -1;
    BackwardFn backward;
  };
  Var append(std::string_view op, Tensor value, bool needs_grad);

  std::deque<Node> nodes_;
  bool track_ = true;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace gravamen::num
