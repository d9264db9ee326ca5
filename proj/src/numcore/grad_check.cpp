#include "gravamen/numcore/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gravamen::num {
namespace {

double evaluate(const ScalarFn& f, const ParamStore& params) {
  Tape tape(false);
  Var out = f(tape, params);
  return out.value().item();
}

}  // namespace

double GradCheckEntry::relative_error() const {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

std::vector<GradCheckEntry> grad_check_entries(const ScalarFn& f, ParamStore& params, double step) {
  if (!(step >= 1e-6 && step <= 1e-4)) throw std::invalid_argument("grad_check: step must lie in [1e-6, 1e-4]");

  Gradients analytic;
  double base = 0.0;
  {
    Tape tape;
    Var loss = f(tape, params);
    base = loss.value().item();
    analytic = tape.backward(loss, params);
  }
  if (evaluate(f, params) != base) {
    throw std::runtime_error("grad_check: function is not deterministic (repeated evaluation differs)");
  }

  std::vector<GradCheckEntry> out;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params.at(p).data();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + step;
      const double up = evaluate(f, params);
      values[k] = saved - step;
      const double down = evaluate(f, params);
      values[k] = saved;
      out.push_back({p, k, analytic.per_param[p][k], (up - down) / (2.0 * step)});
    }
  }
  return out;
}

GradCheckReport grad_check_report(const ScalarFn& f, ParamStore& params, double step) {
  GradCheckReport report;
  for (const auto& e : grad_check_entries(f, params, step)) {
    const double rel = e.relative_error();
    ++report.entries_checked;
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_param = params.name(e.param);
      report.worst_index = e.index;
      report.analytic = e.analytic;
      report.numeric = e.numeric;
    }
  }
  return report;
}

}  // namespace gravamen::num
