#include "gravamen/numcore/gru.hpp"

#include <stdexcept>

namespace gravamen::num {

GruCellParams add_gru_params(ParamStore& store, const std::string& prefix, std::size_t input,
                             std::size_t hidden, Rng& rng) {
  GruCellParams p;
  p.input = input;
  p.hidden = hidden;
  p.w_z = store.add(prefix + ".w_z", glorot_uniform(input, hidden, rng));
  p.u_z = store.add(prefix + ".u_z", glorot_uniform(hidden, hidden, rng));
  p.b_z = store.add(prefix + ".b_z", Tensor({hidden}));
  p.w_r = store.add(prefix + ".w_r", glorot_uniform(input, hidden, rng));
  p.u_r = store.add(prefix + ".u_r", glorot_uniform(hidden, hidden, rng));
  p.b_r = store.add(prefix + ".b_r", Tensor({hidden}));
  p.w_h = store.add(prefix + ".w_h", glorot_uniform(input, hidden, rng));
  p.u_h = store.add(prefix + ".u_h", glorot_uniform(hidden, hidden, rng));
  p.b_h = store.add(prefix + ".b_h", Tensor({hidden}));
  return p;
}

GruVars GruVars::bind(Tape& tape, const ParamStore& store, const GruCellParams& p) {
  return GruVars{tape.param(store, p.w_z), tape.param(store, p.u_z), tape.param(store, p.b_z),
                 tape.param(store, p.w_r), tape.param(store, p.u_r), tape.param(store, p.b_r),
                 tape.param(store, p.w_h), tape.param(store, p.u_h), tape.param(store, p.b_h)};
}

Var gru_step(Var xz, Var xr, Var xh, Var h_prev, const GruVars& p) {
  const Shape& hs = h_prev.shape();
  if (hs.size() != 2 || xz.shape() != hs || xr.shape() != hs || xh.shape() != hs) {
    throw std::invalid_argument("gru_step: projected inputs must match hidden state shape " + to_string(hs));
  }
  Var z = sigmoid(add(xz, matmul(h_prev, p.u_z)));
  Var r = sigmoid(add(xr, matmul(h_prev, p.u_r)));
  Var candidate = tanh(add(xh, matmul(mul(r, h_prev), p.u_h)));
  Var keep = add_scalar(scale(z, -1.0), 1.0);
  return add(mul(keep, h_prev), mul(z, candidate));
}

Var gru_cell(Var x, Var h_prev, const GruVars& p) {
  const Shape& xs = x.shape();
  const Shape& hs = h_prev.shape();
  const Shape& wz = p.w_z.shape();
  if (xs.size() != 2 || hs.size() != 2 || xs[0] != hs[0] || xs[1] != wz[0] || hs[1] != wz[1]) {
    throw std::invalid_argument("gru_cell: x " + to_string(xs) + " / h " + to_string(hs) +
                                " do not match weights " + to_string(wz));
  }
  Var xz = add(matmul(x, p.w_z), p.b_z);
  Var xr = add(matmul(x, p.w_r), p.b_r);
  Var xh = add(matmul(x, p.w_h), p.b_h);
  return gru_step(xz, xr, xh, h_prev, p);
}

}  // namespace gravamen::num
