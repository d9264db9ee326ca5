#pragma once

#include <cstddef>
#include <string>

#include "gravamen/numcore/ops.hpp"

namespace gravamen::num {

// Parameters of one GRU cell:
//   z  = sigmoid(x W_z + h U_z + b_z)
//   r  = sigmoid(x W_r + h U_r + b_r)
//   h~ = tanh(x W_h + (r * h) U_h + b_h)
//   h' = (1 - z) * h + z * h~
struct GruCellParams {
  ParamId w_z, u_z, b_z;
  ParamId w_r, u_r, b_r;
  ParamId w_h, u_h, b_h;
  std::size_t input = 0;
  std::size_t hidden = 0;
};

GruCellParams add_gru_params(ParamStore& store, const std::string& prefix, std::size_t input,
                             std::size_t hidden, Rng& rng);

// The cell's parameters bound onto a tape for one forward pass.
struct GruVars {
  Var w_z, u_z, b_z;
  Var w_r, u_r, b_r;
  Var w_h, u_h, b_h;

  static GruVars bind(Tape& tape, const ParamStore& store, const GruCellParams& p);
};

// x: [B, input], h_prev: [B, hidden] -> [B, hidden]
Var gru_cell(Var x, Var h_prev, const GruVars& p);

// Same recurrence with the input projections (x W_z + b_z, x W_r + b_r, x W_h + b_h)
// computed ahead of time, as sequence encoders do for all steps at once.
Var gru_step(Var xz, Var xr, Var xh, Var h_prev, const GruVars& p);

}  // namespace gravamen::num
