#include "nclt/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nclt::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const auto n = x.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need >= 2 points");
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(n - 1);
}

double se_of_mean(std::span<const double> x) {
  return std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
}

double jackknife_se_variance(std::span<const double> x) {
  const auto n = x.size();
  if (n < 3) throw std::invalid_argument("jackknife: need >= 3 points");
  const double nn = static_cast<double>(n);
  const double m = mean(x);
  double s2 = 0;
  for (double v : x) s2 += (v - m) * (v - m);
  // leave-one-out centered sums: sum_{j!=i}(x_j - m_i)^2 = s2 - d_i^2*n/(n-1)
  std::vector<double> loo(n);
  double loo_mean = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - m;
    loo[i] = (s2 - d * d * nn / (nn - 1.0)) / (nn - 2.0);
    loo_mean += loo[i];
  }
  loo_mean /= nn;
  double sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = loo[i] - loo_mean;
    sq += d * d;
  }
  return std::sqrt((nn - 1.0) / nn * sq);
}

LineFit ols(std::span<const double> x, std::span<const double> y) {
  const auto n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("ols: bad sizes");
  const double nn = static_cast<double>(n);
  double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("ols: degenerate x");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    rss += r * r;
  }
  f.slope_se = (n > 2) ? std::sqrt(rss / (nn - 2.0) / sxx) : 0.0;
  f.r2 = (syy > 0) ? 1.0 - rss / syy : 1.0;
  return f;
}

}  // namespace nclt::stats
