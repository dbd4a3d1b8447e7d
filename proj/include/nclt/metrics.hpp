#pragma once

#include <span>
#include <utility>
#include <vector>

#include "nclt/types.hpp"

namespace nclt {

// Phi(x/sigma).  Rational Chebyshev erf/erfc (Cody, Math. Comp. 1969, the
// SPECFUN coefficient set); absolute error well under 1e-12.
double normal_cdf(double x, double sigma = 1.0);

struct KSReport {
  double d_K = 0;
  long long n = 0;
  double sigma = 1.0;
};

// Exact sup over the empirical CDF against N(0, sigma^2):
// max_i max(|i/n - Phi(x_(i)/sigma)|, |(i-1)/n - Phi(x_(i)/sigma)|).
KSReport kolmogorov_distance(std::vector<double> samples, double sigma);

struct RateFit {
  double exponent = 0;
  double intercept = 0;
  double r2 = 1.0;
  std::vector<std::pair<long long, double>> grid;
};

// Least squares of ln d_K on ln N; exponent is the negated slope.
RateFit fit_rate(std::span<const std::pair<long long, double>> grid);

// Rate exponents (reported even when nonpositive).
double zeta(double alpha, double lambda);
double theta(double gamma, double alpha, double lambda);

}  // namespace nclt
