#include "gravamen/models/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "gravamen/error.hpp"

namespace gravamen::models {

using num::Shape;
using num::Tensor;
using num::Var;

Linear Linear::create(num::ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                      num::Rng& rng, bool bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.has_bias = bias;
  l.w = store.add(prefix + ".w", num::glorot_uniform(in, out, rng));
  if (bias) l.b = store.add(prefix + ".b", Tensor({out}, 0.0));
  return l;
}

Var Linear::apply(num::Tape& tape, const num::ParamStore& store, Var x) const {
  if (x.shape().back() != in) {
    throw std::invalid_argument("linear layer expects input width " + std::to_string(in) + ", got " +
                                num::to_string(x.shape()));
  }
  const Var y = num::matmul(x, tape.param(store, w));
  return has_bias ? num::add(y, tape.param(store, b)) : y;
}

LayerNormParams LayerNormParams::create(num::ParamStore& store, const std::string& prefix, std::size_t dim) {
  LayerNormParams p;
  p.gamma = store.add(prefix + ".gamma", Tensor({dim}, 1.0));
  p.beta = store.add(prefix + ".beta", Tensor({dim}, 0.0));
  return p;
}

Var LayerNormParams::apply(num::Tape& tape, const num::ParamStore& store, Var x, double eps) const {
  return num::layer_norm(x, tape.param(store, gamma), tape.param(store, beta), eps);
}

TokenEmbedding TokenEmbedding::create(num::ParamStore& store, const std::string& prefix, std::size_t vocab_size,
                                      std::size_t dim, num::Rng& rng) {
  TokenEmbedding e;
  e.dim = dim;
  e.table = store.add(prefix + ".table", num::normal_init({vocab_size, dim}, 0.02, rng));
  return e;
}

Var TokenEmbedding::apply(num::Tape& tape, const num::ParamStore& store, const Batch& batch) const {
  return num::embedding(tape.param(store, table), batch.ids, {batch.size, batch.seq_len});
}

BiGruLayer BiGruLayer::create(num::ParamStore& store, const std::string& prefix, std::size_t input,
                              std::size_t hidden, num::Rng& rng) {
  BiGruLayer l;
  l.fwd = num::add_gru_params(store, prefix + ".fwd", input, hidden, rng);
  l.bwd = num::add_gru_params(store, prefix + ".bwd", input, hidden, rng);
  return l;
}

namespace {

Var run_direction(num::Tape& tape, const num::ParamStore& store, const num::GruCellParams& p, Var x,
                  std::span<const std::size_t> lengths, bool reverse) {
  const std::size_t B = x.shape()[0], L = x.shape()[1], H = p.hidden;
  const auto v = num::GruVars::bind(tape, store, p);
  const Var xz = num::add(num::matmul(x, v.w_z), v.b_z);
  const Var xr = num::add(num::matmul(x, v.w_r), v.b_r);
  const Var xh = num::add(num::matmul(x, v.w_h), v.b_h);
  Var h = tape.constant(Tensor({B, H}, 0.0));
  std::vector<Var> outputs(L);
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t t = reverse ? L - 1 - step : step;
    auto at = [&](Var proj) { return num::reshape(num::slice(proj, 1, t, 1), {B, H}); };
    const Var next = num::gru_step(at(xz), at(xr), at(xh), h, v);
    std::vector<double> keep(B);
    bool all_valid = true;
    for (std::size_t b = 0; b < B; ++b) {
      keep[b] = t < lengths[b] ? 1.0 : 0.0;
      all_valid = all_valid && keep[b] == 1.0;
    }
    if (all_valid) {
      h = next;
    } else {
      std::vector<double> hold(B);
      for (std::size_t b = 0; b < B; ++b) hold[b] = 1.0 - keep[b];
      const Var m = tape.constant(Tensor({B, 1}, std::move(keep)));
      const Var inv = tape.constant(Tensor({B, 1}, std::move(hold)));
      h = num::add(num::mul(next, m), num::mul(h, inv));
    }
    outputs[t] = num::reshape(h, {B, 1, H});
  }
  return num::concat(outputs, 1);
}

}  // namespace

Var BiGruLayer::apply(num::Tape& tape, const num::ParamStore& store, Var x,
                      std::span<const std::size_t> lengths) const {
  if (x.shape().size() != 3 || x.shape()[2] != fwd.input) {
    throw std::invalid_argument("BiGRU expects [B, L, " + std::to_string(fwd.input) + "], got " +
                                num::to_string(x.shape()));
  }
  if (lengths.size() != x.shape()[0]) throw std::invalid_argument("BiGRU: one length per row required");
  for (auto len : lengths) {
    if (len == 0) throw std::invalid_argument("BiGRU: true length must be positive");
  }
  const Var parts[] = {run_direction(tape, store, fwd, x, lengths, false),
                       run_direction(tape, store, bwd, x, lengths, true)};
  return num::concat(parts, 2);
}

BiGruStack BiGruStack::create(num::ParamStore& store, const std::string& prefix, std::size_t input,
                              std::size_t hidden, std::size_t depth, num::Rng& rng) {
  BiGruStack s;
  for (std::size_t i = 0; i < depth; ++i) {
    s.layers.push_back(BiGruLayer::create(store, prefix + "." + std::to_string(i), i == 0 ? input : 2 * hidden,
                                          hidden, rng));
  }
  return s;
}

Var BiGruStack::apply(num::Tape& tape, const num::ParamStore& store, Var x,
                      std::span<const std::size_t> lengths) const {
  for (const auto& layer : layers) x = layer.apply(tape, store, x, lengths);
  return x;
}

AdditiveAttention AdditiveAttention::create(num::ParamStore& store, const std::string& prefix, std::size_t dim,
                                            num::Rng& rng) {
  AdditiveAttention a;
  a.dim = dim;
  a.w = store.add(prefix + ".w", num::glorot_uniform(dim, dim, rng));
  a.b = store.add(prefix + ".b", Tensor({dim}, 0.0));
  a.v = store.add(prefix + ".v", num::glorot_uniform(dim, 1, rng));
  return a;
}

AdditiveAttention::Result AdditiveAttention::apply(num::Tape& tape, const num::ParamStore& store, Var h,
                                                   std::span<const std::size_t> lengths) const {
  const std::size_t B = h.shape()[0], L = h.shape()[1], D = h.shape()[2];
  const Var u = num::tanh(num::add(num::matmul(h, tape.param(store, w)), tape.param(store, b)));
  Var scores = num::reshape(num::matmul(u, tape.param(store, v)), {B, L});
  std::vector<double> mask(B * L, 0.0);
  bool any_pad = false;
  for (std::size_t r = 0; r < B; ++r) {
    if (lengths[r] == 0) throw std::invalid_argument("attention: true length must be positive");
    for (std::size_t t = lengths[r]; t < L; ++t) {
      mask[r * L + t] = kMaskValue;
      any_pad = true;
    }
  }
  if (any_pad) scores = num::add(scores, tape.constant(Tensor({B, L}, std::move(mask))));
  const Var weights = num::softmax(scores, 1);
  const Var context = num::reshape(num::bmm(num::reshape(weights, {B, 1, L}), h), {B, D});
  return {context, weights};
}

BiGruAttBranch BiGruAttBranch::create(num::ParamStore& store, const std::string& prefix, std::size_t input,
                                      std::size_t hidden, num::Rng& rng) {
  BiGruAttBranch br;
  br.gru = BiGruLayer::create(store, prefix + ".gru", input, hidden, rng);
  br.attention = AdditiveAttention::create(store, prefix + ".att", 2 * hidden, rng);
  return br;
}

AdditiveAttention::Result BiGruAttBranch::apply(num::Tape& tape, const num::ParamStore& store, Var x,
                                                std::span<const std::size_t> lengths) const {
  return attention.apply(tape, store, gru.apply(tape, store, x, lengths), lengths);
}

EncoderBlock EncoderBlock::create(num::ParamStore& store, const std::string& prefix, std::size_t dim,
                                  std::size_t heads, std::size_t ffn_dim, num::Rng& rng) {
  EncoderBlock blk;
  blk.heads = heads;
  blk.q = Linear::create(store, prefix + ".q", dim, dim, rng);
  blk.k = Linear::create(store, prefix + ".k", dim, dim, rng, false);
  blk.v = Linear::create(store, prefix + ".v", dim, dim, rng);
  blk.o = Linear::create(store, prefix + ".o", dim, dim, rng);
  blk.ln1 = LayerNormParams::create(store, prefix + ".ln1", dim);
  blk.ff1 = Linear::create(store, prefix + ".ff1", dim, ffn_dim, rng);
  blk.ff2 = Linear::create(store, prefix + ".ff2", ffn_dim, dim, rng);
  blk.ln2 = LayerNormParams::create(store, prefix + ".ln2", dim);
  return blk;
}

Var EncoderBlock::apply(num::Tape& tape, const num::ParamStore& store, Var x, const std::vector<bool>& key_valid,
                        const ModelSpec& spec, bool train, num::Rng& rng, Var* attention) const {
  const std::size_t B = x.shape()[0], T = x.shape()[1], E = x.shape()[2];
  const std::size_t H = heads, dh = E / H;
  auto split = [&](Var y, std::vector<std::size_t> order, Shape out) {
    return num::reshape(num::permute(num::reshape(y, {B, T, H, dh}), std::move(order)), std::move(out));
  };
  const Var qh = split(q.apply(tape, store, x), {0, 2, 1, 3}, {B * H, T, dh});
  const Var kh = split(k.apply(tape, store, x), {0, 2, 3, 1}, {B * H, dh, T});
  const Var vh = split(v.apply(tape, store, x), {0, 2, 1, 3}, {B * H, T, dh});
  Var scores = num::scale(num::bmm(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
  std::vector<double> mask(B * H * T, 0.0);
  bool any_pad = false;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t j = 0; j < T; ++j) {
      if (key_valid[b * T + j]) continue;
      any_pad = true;
      for (std::size_t hh = 0; hh < H; ++hh) mask[(b * H + hh) * T + j] = kMaskValue;
    }
  }
  if (any_pad) scores = num::add(scores, tape.constant(Tensor({B * H, 1, T}, std::move(mask))));
  const Var probs = num::softmax(scores, 2);
  if (attention != nullptr) *attention = probs;
  Var ctx = num::bmm(probs, vh);
  ctx = num::reshape(num::permute(num::reshape(ctx, {B, H, T, dh}), {0, 2, 1, 3}), {B, T, E});
  const Var attended = num::dropout(o.apply(tape, store, ctx), spec.dropout, train, rng);
  x = ln1.apply(tape, store, num::add(x, attended), spec.layer_norm_eps);
  const Var ff = ff2.apply(tape, store, num::relu(ff1.apply(tape, store, x)));
  return ln2.apply(tape, store, num::add(x, num::dropout(ff, spec.dropout, train, rng)), spec.layer_norm_eps);
}

EncoderStack EncoderStack::create(num::ParamStore& store, const std::string& prefix, const ModelSpec& spec,
                                  num::Rng& rng) {
  EncoderStack s;
  for (std::size_t i = 0; i < spec.layers; ++i) {
    s.blocks.push_back(EncoderBlock::create(store, prefix + "." + std::to_string(i), spec.embed_dim, spec.heads,
                                            spec.ffn_dim, rng));
  }
  return s;
}

Var EncoderStack::pooled(num::Tape& tape, const num::ParamStore& store, Var x, const std::vector<bool>& key_valid,
                         const ModelSpec& spec, bool train, num::Rng& rng, std::vector<Var>* attention) const {
  for (const auto& blk : blocks) {
    Var probs;
    x = blk.apply(tape, store, x, key_valid, spec, train, rng, &probs);
    if (attention != nullptr) attention->push_back(probs);
  }
  const std::size_t B = x.shape()[0], E = x.shape()[2];
  return num::reshape(num::slice(x, 1, 0, 1), {B, E});
}

ShiftingGateParams ShiftingGateParams::create(num::ParamStore& store, const std::string& prefix,
                                              std::size_t embed_dim, std::size_t projection_dim, num::Rng& rng) {
  ShiftingGateParams g;
  g.gate = Linear::create(store, prefix + ".gate", embed_dim + projection_dim, embed_dim, rng);
  g.shift = Linear::create(store, prefix + ".shift", projection_dim, embed_dim, rng);
  return g;
}

Var project_features(num::Tape& tape, const num::ParamStore& store, const Linear& projection, Var features) {
  if (features.shape().size() != 2 || features.shape()[1] != projection.in) {
    throw std::invalid_argument("feature vector of shape " + num::to_string(features.shape()) +
                                " does not match projection input " + std::to_string(projection.in));
  }
  return projection.apply(tape, store, features);
}

Var shifting_gate(num::Tape& tape, const num::ParamStore& store, Var e, Var p, const ShiftingGateParams& params,
                  const LayerNormParams& norm, const ModelSpec& spec, bool train, num::Rng& rng, GateTrace* trace) {
  if (e.shape().size() != 3 || p.shape().size() != 2 || e.shape()[0] != p.shape()[0] ||
      e.shape()[2] != params.shift.out || p.shape()[1] != params.shift.in) {
    throw std::invalid_argument("shifting gate: incompatible shapes " + num::to_string(e.shape()) + " and " +
                                num::to_string(p.shape()));
  }
  const std::size_t B = e.shape()[0], T = e.shape()[1], P = p.shape()[1];
  const Var p_seq = num::broadcast_to(num::reshape(p, {B, 1, P}), {B, T, P});
  const Var both[] = {e, p_seq};
  const Var g = num::sigmoid(params.gate.apply(tape, store, num::concat(both, 2)));
  const Var shift = num::reshape(params.shift.apply(tape, store, p), {B, 1, params.shift.out});
  const Var h = num::mul(g, shift);
  const Var ratio = num::div(num::scale(num::l2_norm(e, -1), spec.gate_scale),
                             num::add_scalar(num::l2_norm(h, -1), spec.gate_eps));
  const Var s = num::min_scalar(ratio, 1.0);
  if (trace != nullptr) *trace = GateTrace{g, h, s};
  const Var shifted = num::add(e, num::mul(s, h));
  return num::dropout(norm.apply(tape, store, shifted, spec.layer_norm_eps), spec.dropout, train, rng);
}

TransformerEmbedding TransformerEmbedding::create(num::ParamStore& store, const std::string& prefix,
                                                  const ModelSpec& spec, std::size_t vocab_size,
                                                  std::size_t feature_dim, bool fused, num::Rng& rng) {
  TransformerEmbedding te;
  te.tokens = TokenEmbedding::create(store, prefix + ".tokens", vocab_size, spec.embed_dim, rng);
  te.positions = store.add(prefix + ".positions", num::normal_init({spec.max_len + 1, spec.embed_dim}, 0.02, rng));
  te.cls = store.add(prefix + ".cls", num::normal_init({1, spec.embed_dim}, 0.02, rng));
  te.norm = LayerNormParams::create(store, prefix + ".norm", spec.embed_dim);
  te.fused = fused;
  if (fused) {
    if (feature_dim == 0) throw ConfigError("the shifting gate needs a non-empty feature vector");
    te.projection = Linear::create(store, prefix + ".projection", feature_dim, spec.projection_dim, rng);
    te.gate = ShiftingGateParams::create(store, prefix + ".msg", spec.embed_dim, spec.projection_dim, rng);
  }
  return te;
}

Var TransformerEmbedding::raw(num::Tape& tape, const num::ParamStore& store, const Batch& batch,
                              const ModelSpec& spec) const {
  const std::size_t B = batch.size, T = batch.seq_len + 1, E = tokens.dim;
  if (T > spec.max_len + 1) {
    throw std::invalid_argument("sequence of " + std::to_string(batch.seq_len) +
                                " tokens exceeds the positional table (max_len " + std::to_string(spec.max_len) + ")");
  }
  const Var cls_rows = num::broadcast_to(num::reshape(tape.param(store, cls), {1, 1, E}), {B, 1, E});
  const Var parts[] = {cls_rows, tokens.apply(tape, store, batch)};
  const Var pos = num::slice(tape.param(store, positions), 0, 0, T);
  return num::add(num::concat(parts, 1), pos);
}

Var TransformerEmbedding::apply(num::Tape& tape, const num::ParamStore& store, const Batch& batch,
                                const ModelSpec& spec, bool train, num::Rng& rng, GateTrace* trace) const {
  const Var e = raw(tape, store, batch, spec);
  if (!fused) return num::dropout(norm.apply(tape, store, e, spec.layer_norm_eps), spec.dropout, train, rng);
  if (!batch.has_features) throw DataError("this model needs linguistic features for every document");
  const Var p = project_features(tape, store, projection, tape.constant(batch.features));
  return shifting_gate(tape, store, e, p, gate, norm, spec, train, rng, trace);
}

std::vector<bool> key_validity(const Batch& batch) {
  const std::size_t T = batch.seq_len + 1;
  std::vector<bool> valid(batch.size * T, false);
  for (std::size_t b = 0; b < batch.size; ++b) {
    for (std::size_t j = 0; j <= batch.lengths[b]; ++j) valid[b * T + j] = true;
  }
  return valid;
}

}  // namespace gravamen::models
