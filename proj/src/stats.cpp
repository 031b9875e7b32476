#include "seth/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace seth::stats {

AffineFit affine_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("affine_fit: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("affine_fit: x is constant");
  AffineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

TrendTest cochran_armitage(const std::vector<double>& scores, const std::vector<double>& successes,
                           const std::vector<double>& totals) {
  const std::size_t k = scores.size();
  if (successes.size() != k || totals.size() != k || k < 2) throw std::invalid_argument("cochran_armitage: sizes");
  double n = 0, r = 0;
  for (std::size_t i = 0; i < k; ++i) {
    n += totals[i];
    r += successes[i];
  }
  const double p = r / n;
  double t = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < k; ++i) {
    t += scores[i] * (successes[i] - totals[i] * p);
    s1 += totals[i] * scores[i] * scores[i];
    s2 += totals[i] * scores[i];
  }
  const double var = p * (1 - p) * (s1 - s2 * s2 / n);
  TrendTest out;
  if (var <= 0) return out;
  out.z = t / std::sqrt(var);
  out.p_value = std::erfc(std::abs(out.z) / std::sqrt(2.0));
  return out;
}

Interval proportion_ci(double successes, double total) {
  if (total <= 0) return {0, 0};
  const double p = successes / total;
  const double half = 1.96 * std::sqrt(p * (1 - p) / total);
  return {p - half, p + half};
}

}  // namespace seth::stats
