#pragma once

// Two-sample and goodness-of-fit tests.

#include <span>

namespace motionlm {

struct TestResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

double mean(std::span<const double> values);
// Unbiased sample variance.
double variance(std::span<const double> values);

// Welch's unequal-variance t-test, two-sided. Both samples need >= 2 values.
// Two constant samples give p = 1 when their means agree and p = 0 otherwise.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Pearson chi-square test of counts against category probabilities.
// Categories with zero probability must have zero counts.
TestResult chi_square_gof(std::span<const double> observed, std::span<const double> probabilities);

}  // namespace motionlm
