#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gravamen/numcore/params.hpp"
#include "gravamen/numcore/tape.hpp"

// Differentiable operations over Tape values. Every op records its output on the tape of
// its first argument; mixing tapes is an error.
namespace gravamen::num {

// [..., K] x [K, N] -> [..., N]
Var matmul(Var a, Var b);
// [B, M, K] x [B, K, N] -> [B, M, N]
Var bmm(Var a, Var b);

// Elementwise with numpy-style broadcasting.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
// min(x, cap) elementwise; the gradient passes only where x < cap.
Var min_scalar(Var x, double cap);

Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);

Var softmax(Var x, int axis);
// Normalizes over the last axis; gamma and beta have the size of that axis.
Var layer_norm(Var x, Var gamma, Var beta, double eps);
// Inverted dropout: scales survivors by 1/(1-rate) in train mode, identity otherwise.
Var dropout(Var x, double rate, bool train, Rng& rng);

Var concat(std::span<const Var> parts, int axis);
Var slice(Var x, int axis, std::size_t start, std::size_t length);
Var reshape(Var x, Shape shape);
Var permute(Var x, std::vector<std::size_t> order);
Var broadcast_to(Var x, Shape shape);

// Gathers rows of `table` [V, D]; output shape is index_shape + [D].
Var embedding(Var table, std::span<const int> ids, Shape index_shape);

Var sum(Var x);
Var mean(Var x);
// Euclidean norm over `axis`, kept as a size-1 dimension. Zero vectors get a zero gradient.
Var l2_norm(Var x, int axis = -1);

// Mean categorical cross-entropy of logits [N, K] against integer labels.
Var cross_entropy(Var logits, std::span<const int> labels);
// Mean binary cross-entropy of logits (any shape with N entries) against {0,1} targets.
Var binary_cross_entropy(Var logits, std::span<const double> targets);

// Plain (non-recorded) helpers shared with oracles and inference code.
Tensor softmax_values(const Tensor& x, int axis);

}  // namespace gravamen::num
