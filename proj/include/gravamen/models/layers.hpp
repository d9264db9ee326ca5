#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gravamen/models/batch.hpp"
#include "gravamen/models/spec.hpp"
#include "gravamen/numcore/gru.hpp"
#include "gravamen/numcore/ops.hpp"

namespace gravamen::models {

// Additive mask value for excluded attention positions; exp() of it underflows to exactly 0.
inline constexpr double kMaskValue = -1e9;

struct Linear {
  num::ParamId w, b;
  std::size_t in = 0, out = 0;
  bool has_bias = true;

  static Linear create(num::ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                       num::Rng& rng, bool bias = true);
  // x: [..., in] -> [..., out]
  num::Var apply(num::Tape& tape, const num::ParamStore& store, num::Var x) const;
};

struct LayerNormParams {
  num::ParamId gamma, beta;

  static LayerNormParams create(num::ParamStore& store, const std::string& prefix, std::size_t dim);
  num::Var apply(num::Tape& tape, const num::ParamStore& store, num::Var x, double eps) const;
};

// Token lookup table [V, E].
struct TokenEmbedding {
  num::ParamId table;
  std::size_t dim = 0;

  static TokenEmbedding create(num::ParamStore& store, const std::string& prefix, std::size_t vocab_size,
                               std::size_t dim, num::Rng& rng);
  // [B, L, E] for the batch's padded ids.
  num::Var apply(num::Tape& tape, const num::ParamStore& store, const Batch& batch) const;
};

// Forward and backward GRU over a padded batch; steps past a row's length leave its state untouched.
struct BiGruLayer {
  num::GruCellParams fwd, bwd;

  static BiGruLayer create(num::ParamStore& store, const std::string& prefix, std::size_t input,
                           std::size_t hidden, num::Rng& rng);
  std::size_t output_dim() const { return 2 * fwd.hidden; }
  // x: [B, L, input] -> [B, L, 2 * hidden]
  num::Var apply(num::Tape& tape, const num::ParamStore& store, num::Var x,
                 std::span<const std::size_t> lengths) const;
};

struct BiGruStack {
  std::vector<BiGruLayer> layers;

  static BiGruStack create(num::ParamStore& store, const std::string& prefix, std::size_t input,
                           std::size_t hidden, std::size_t depth, num::Rng& rng);
  std::size_t output_dim() const { return layers.back().output_dim(); }
  num::Var apply(num::Tape& tape, const num::ParamStore& store, num::Var x,
                 std::span<const std::size_t> lengths) const;
};

// u_i = tanh(W_a h_i + b_a), a = softmax(v . u_i) over real positions, c = sum_i a_i h_i.
struct AdditiveAttention {
  num::ParamId w, b, v;
  std::size_t dim = 0;

  struct Result {
    num::Var context;  // [B, D]
    num::Var weights;  // [B, L]
  };

  static AdditiveAttention create(num::ParamStore& store, const std::string& prefix, std::size_t dim,
                                  num::Rng& rng);
  Result apply(num::Tape& tape, const num::ParamStore& store, num::Var h,
               std::span<const std::size_t> lengths) const;
};

// BiGRU layer followed by attention pooling, the unit each BiGRU-Att branch is built from.
struct BiGruAttBranch {
  BiGruLayer gru;
  AdditiveAttention attention;

  static BiGruAttBranch create(num::ParamStore& store, const std::string& prefix, std::size_t input,
                               std::size_t hidden, num::Rng& rng);
  AdditiveAttention::Result apply(num::Tape& tape, const num::ParamStore& store, num::Var x,
                                  std::span<const std::size_t> lengths) const;
};

// Post-norm transformer block: multi-head self-attention and a ReLU feed-forward layer,
// each followed by dropout, a residual connection and layer normalization. The key projection
// has no bias: it would shift every score of a query equally and cancel in the softmax.
struct EncoderBlock {
  Linear q, k, v, o;
  LayerNormParams ln1;
  Linear ff1, ff2;
  LayerNormParams ln2;
  std::size_t heads = 1;

  static EncoderBlock create(num::ParamStore& store, const std::string& prefix, std::size_t dim,
                             std::size_t heads, std::size_t ffn_dim, num::Rng& rng);
  // x: [B, T, E]; key_valid[b * T + j] marks attendable positions. `attention` receives [B*H, T, T].
  num::Var apply(num::Tape& tape, const num::ParamStore& store, num::Var x, const std::vector<bool>& key_valid,
                 const ModelSpec& spec, bool train, num::Rng& rng, num::Var* attention = nullptr) const;
};

struct EncoderStack {
  std::vector<EncoderBlock> blocks;

  static EncoderStack create(num::ParamStore& store, const std::string& prefix, const ModelSpec& spec,
                             num::Rng& rng);
  // Returns the first-position representation [B, E].
  num::Var pooled(num::Tape& tape, const num::ParamStore& store, num::Var x, const std::vector<bool>& key_valid,
                  const ModelSpec& spec, bool train, num::Rng& rng, std::vector<num::Var>* attention = nullptr) const;
};

// Shifting gate parameters. W_g acts on [e_t ; p], W_h on p.
struct ShiftingGateParams {
  Linear gate;
  Linear shift;

  static ShiftingGateParams create(num::ParamStore& store, const std::string& prefix, std::size_t embed_dim,
                                   std::size_t projection_dim, num::Rng& rng);
};

struct GateTrace {
  num::Var gate;          // [B, T, E]
  num::Var displacement;  // h_t, [B, T, E]
  num::Var scale;         // s_t, [B, T, 1]
};

// W_p F + b_p. features: [B, F] -> [B, projection_dim].
num::Var project_features(num::Tape& tape, const num::ParamStore& store, const Linear& projection,
                          num::Var features);

// Per position: g = sigmoid(W_g [e_t ; p] + b_g), h = g * (W_h p + b_h),
// s = min(lambda ||e_t|| / (||h|| + eps), 1), out = dropout(layer_norm(e_t + s h)).
// e: [B, T, E]; p: [B, P], broadcast to every position.
num::Var shifting_gate(num::Tape& tape, const num::ParamStore& store, num::Var e, num::Var p,
                       const ShiftingGateParams& params, const LayerNormParams& norm, const ModelSpec& spec,
                       bool train, num::Rng& rng, GateTrace* trace = nullptr);

// Token + position embeddings with a learned classification vector in front, optionally fused
// with projected linguistic features through the shifting gate.
struct TransformerEmbedding {
  TokenEmbedding tokens;
  num::ParamId positions;  // [max_len + 1, E]
  num::ParamId cls;        // [1, E]
  LayerNormParams norm;
  bool fused = false;
  Linear projection;
  ShiftingGateParams gate;

  static TransformerEmbedding create(num::ParamStore& store, const std::string& prefix, const ModelSpec& spec,
                                     std::size_t vocab_size, std::size_t feature_dim, bool fused, num::Rng& rng);
  // Raw sums e = token + position with the classification vector at position 0: [B, 1 + L, E].
  num::Var raw(num::Tape& tape, const num::ParamStore& store, const Batch& batch, const ModelSpec& spec) const;
  // Encoder input: dropout(layer_norm(e)) or the gated equivalent when fused.
  num::Var apply(num::Tape& tape, const num::ParamStore& store, const Batch& batch, const ModelSpec& spec,
                 bool train, num::Rng& rng, GateTrace* trace = nullptr) const;
};

// Valid-key layout for a sequence with the classification position prepended.
std::vector<bool> key_validity(const Batch& batch);

}  // namespace gravamen::models
