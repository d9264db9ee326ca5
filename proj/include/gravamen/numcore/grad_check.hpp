#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "gravamen/numcore/tape.hpp"

namespace gravamen::num {

// Builds a scalar on the given tape from the parameter values in the store.
using ScalarFn = std::function<Var(Tape&, const ParamStore&)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

struct GradCheckEntry {
  std::size_t param = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;

  double relative_error() const;
};

// Analytic and central-difference derivative for every parameter entry, in store order.
std::vector<GradCheckEntry> grad_check_entries(const ScalarFn& f, ParamStore& params, double step = 1e-5);

// Compares reverse-mode gradients of `f` with central differences of width 2*step for every
// parameter entry. Relative error per entry: |a - n| / max(|a|, |n|, 1e-8).
// Throws std::invalid_argument for step outside [1e-6, 1e-4] and std::runtime_error when two
// evaluations at the same point disagree (non-deterministic f). `params` is restored on return.
GradCheckReport grad_check_report(const ScalarFn& f, ParamStore& params, double step = 1e-5);

inline double grad_check(const ScalarFn& f, ParamStore& params, double step = 1e-5) {
  return grad_check_report(f, params, step).max_relative_error;
}

}  // namespace gravamen::num
