#pragma once

#include <cstddef>
#include <span>

namespace gravamen::eval {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

// Two-sided paired t-test on a - b. All-zero differences give t = 0, p = 1; a nonzero constant
// difference gives t = +-inf, p = 0. Throws std::invalid_argument for mismatched or < 2 pairs.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct FlipReport {
  std::size_t total = 0;
  std::size_t flips = 0;
  double flip_percent = 0.0;
  // Shares of the flips, summing to 100 when flips > 0.
  double complaint_to_non_percent = 0.0;
  double non_to_complaint_percent = 0.0;
  std::size_t stable_wrong = 0;
  double stable_wrong_percent = 0.0;
  // Gold class of the stable-wrong items, shares of stable_wrong.
  double stable_wrong_complaint_percent = 0.0;
  double stable_wrong_non_percent = 0.0;
};

// Binary labels use the corpus coding: 0 complaint, 1 non-complaint. Directions read a -> b.
FlipReport flip_analysis(std::span<const int> preds_a, std::span<const int> preds_b, std::span<const int> gold);

}  // namespace gravamen::eval
