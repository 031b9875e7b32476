#pragma once

#include <vector>

namespace seth::stats {

struct AffineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

AffineFit affine_fit(const std::vector<double>& x, const std::vector<double>& y);

struct TrendTest {
  double z = 0;
  double p_value = 1;
};

/// Cochran-Armitage test for a linear trend in proportions, two-sided.
TrendTest cochran_armitage(const std::vector<double>& scores, const std::vector<double>& successes,
                           const std::vector<double>& totals);

struct Interval {
  double low, high;
};

/// Normal-approximation 95% interval for a binomial proportion.
Interval proportion_ci(double successes, double total);

}  // namespace seth::stats
