#include "nclt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nclt/stats.hpp"

namespace nclt {

namespace {

// erf/erfc after W. J. Cody, "Rational Chebyshev approximations for the
// error function", Math. Comp. 23 (1969) 631-638, with the SPECFUN
// coefficients (netlib.org/specfun/erf); >= 18 significant digits in theory.
double calerf(double x, bool complement) {
  static const double a[5] = {3.1611237438705656, 113.864154151050156,
                              377.485237685302021, 3209.37758913846947,
                              .185777706184603153};
  static const double b[4] = {23.6012909523441209, 244.024637934444173,
                              1282.61652607737228, 2844.23683343917062};
  static const double c[9] = {.564188496988670089, 8.88314979438837594,
                              66.1191906371416295, 298.635138197400131,
                              881.95222124176909,  1712.04761263407058,
                              2051.07837782607147, 1230.33935479799725,
                              2.15311535474403846e-8};
  static const double d[8] = {15.7449261107098347, 117.693950891312499,
                              537.181101862009858, 1621.38957456669019,
                              3290.79923573345963, 4362.61909014324716,
                              3439.36767414372164, 1230.33935480374942};
  static const double p[6] = {.305326634961232344, .360344899949804439,
                              .125781726111229246, .0160837851487422766,
                              6.58749161529837803e-4, .0163153871373020978};
  static const double q[5] = {2.56852019228982242, 1.87295284992346047,
                              .527905102951428412, .0605183413124413191,
                              .00233520497626869185};
  const double sqrpi = 0.56418958354775628695;
  const double thresh = 0.46875;
  const double xbig = 26.543, xsmall = 1.11e-16;

  const double y = std::abs(x);
  double result;
  if (y <= thresh) {
    double ysq = (y > xsmall) ? y * y : 0.0;
    double xnum = a[4] * ysq, xden = ysq;
    for (int i = 0; i < 3; ++i) {
      xnum = (xnum + a[i]) * ysq;
      xden = (xden + b[i]) * ysq;
    }
    result = x * (xnum + a[3]) / (xden + b[3]);
    return complement ? 1.0 - result : result;
  }
  if (y <= 4.0) {
    double xnum = c[8] * y, xden = y;
    for (int i = 0; i < 7; ++i) {
      xnum = (xnum + c[i]) * y;
      xden = (xden + d[i]) * y;
    }
    result = (xnum + c[7]) / (xden + d[7]);
    const double ysq = std::floor(y * 16.0) / 16.0;
    const double del = (y - ysq) * (y + ysq);
    result *= std::exp(-ysq * ysq) * std::exp(-del);
  } else if (y < xbig) {
    const double ysq = 1.0 / (y * y);
    double xnum = p[5] * ysq, xden = ysq;
    for (int i = 0; i < 4; ++i) {
      xnum = (xnum + p[i]) * ysq;
      xden = (xden + q[i]) * ysq;
    }
    result = ysq * (xnum + p[4]) / (xden + q[4]);
    result = (sqrpi - result) / y;
    const double ysq2 = std::floor(y * 16.0) / 16.0;
    const double del = (y - ysq2) * (y + ysq2);
    result *= std::exp(-ysq2 * ysq2) * std::exp(-del);
  } else {
    result = 0.0;
  }
  // result now holds erfc(|x|)
  if (complement) return (x < 0) ? 2.0 - result : result;
  return (x < 0) ? result - 1.0 : 1.0 - result;
}

}  // namespace

double normal_cdf(double x, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("normal_cdf: sigma > 0");
  const double z = x / (sigma * 1.4142135623730950488016887242097);
  return 0.5 * calerf(-z, true);  // Phi(t) = erfc(-t/sqrt2)/2
}

KSReport kolmogorov_distance(std::vector<double> samples, double sigma) {
  if (samples.empty())
    throw std::invalid_argument("kolmogorov_distance: empty sample");
  if (!(sigma > 0)) throw std::invalid_argument("kolmogorov_distance: sigma > 0");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = normal_cdf(samples[i], sigma);
    const double hi = static_cast<double>(i + 1) / n - F;
    const double lo = F - static_cast<double>(i) / n;
    d = std::max({d, std::abs(hi), std::abs(lo)});
  }
  KSReport r;
  r.d_K = d;
  r.n = static_cast<long long>(samples.size());
  r.sigma = sigma;
  return r;
}

RateFit fit_rate(std::span<const std::pair<long long, double>> grid) {
  if (grid.size() < 4) throw std::invalid_argument("fit_rate: need >= 4 points");
  std::vector<double> lx, ly;
  long long prev = 0;
  for (const auto& [N, dk] : grid) {
    if (N <= prev) throw std::invalid_argument("fit_rate: grid must increase in N");
    prev = N;
    if (!(dk > 0)) throw std::invalid_argument("fit_rate: d_K must be positive");
    lx.push_back(std::log(static_cast<double>(N)));
    ly.push_back(std::log(dk));
  }
  const auto f = stats::ols(lx, ly);
  RateFit out;
  out.exponent = -f.slope;
  out.intercept = f.intercept;
  out.r2 = f.r2;
  out.grid.assign(grid.begin(), grid.end());
  return out;
}

double zeta(double alpha, double lambda) {
  return 0.1 * std::min(std::min(alpha, lambda) - 1.0, lambda / (lambda + 8.0));
}

double theta(double gamma, double alpha, double lambda) {
  if (!(gamma > 0 && gamma < 1))
    throw std::invalid_argument("theta: gamma in (0,1)");
  if (!(alpha > 1) || !(lambda > 1))
    throw std::invalid_argument("theta: alpha, lambda > 1");
  const double m = std::min(alpha, lambda);
  return std::min({0.5 * (1.0 - gamma), (m - 1.0) / 4.0,
                   gamma * m / (2.0 + gamma * m),
                   lambda / (4.0 * (lambda + 4.0))});
}

}  // namespace nclt
