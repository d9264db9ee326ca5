#include "gravamen/eval/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gravamen::eval {

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("paired t-test needs at least two pairs");
  const std::size_t n = a.size();
  TTestResult r;
  r.df = n - 1;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    all_zero = all_zero && d == 0.0;
    ss += (d - mean) * (d - mean);
  }
  if (all_zero) return r;
  const double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  if (se == 0.0) {
    r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p = 0.0;
    return r;
  }
  r.t = mean / se;
  const boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  return r;
}

FlipReport flip_analysis(std::span<const int> preds_a, std::span<const int> preds_b, std::span<const int> gold) {
  if (preds_a.size() != preds_b.size() || preds_a.size() != gold.size()) {
    throw std::invalid_argument("flip analysis inputs differ in length");
  }
  if (gold.empty()) throw std::invalid_argument("no items to compare");
  FlipReport r;
  r.total = gold.size();
  std::size_t c_to_n = 0, n_to_c = 0, wrong_c = 0, wrong_n = 0;
  for (std::size_t i = 0; i < r.total; ++i) {
    for (int v : {preds_a[i], preds_b[i], gold[i]}) {
      if (v != 0 && v != 1) throw std::invalid_argument("flip analysis expects binary labels");
    }
    if (preds_a[i] != preds_b[i]) {
      ++r.flips;
      (preds_a[i] == 0 ? c_to_n : n_to_c) += 1;
    } else if (preds_a[i] != gold[i]) {
      ++r.stable_wrong;
      (gold[i] == 0 ? wrong_c : wrong_n) += 1;
    }
  }
  const auto pct = [](std::size_t x, std::size_t of) {
    return of == 0 ? 0.0 : 100.0 * static_cast<double>(x) / static_cast<double>(of);
  };
  r.flip_percent = pct(r.flips, r.total);
  r.complaint_to_non_percent = pct(c_to_n, r.flips);
  r.non_to_complaint_percent = pct(n_to_c, r.flips);
  r.stable_wrong_percent = pct(r.stable_wrong, r.total);
  r.stable_wrong_complaint_percent = pct(wrong_c, r.stable_wrong);
  r.stable_wrong_non_percent = pct(wrong_n, r.stable_wrong);
  return r;
}

}  // namespace gravamen::eval
