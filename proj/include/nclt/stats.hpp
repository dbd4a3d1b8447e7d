#pragma once

#include <span>

namespace nclt::stats {

double mean(std::span<const double> x);

// Unbiased sample variance (n-1 denominator).
double sample_variance(std::span<const double> x);

double se_of_mean(std::span<const double> x);

// Jackknife standard error of the unbiased sample variance.
double jackknife_se_variance(std::span<const double> x);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  double r2 = 1.0;
};

// Ordinary least squares of y on x.
LineFit ols(std::span<const double> x, std::span<const double> y);

}  // namespace nclt::stats
