#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nclt/model.hpp"
#include "nclt/process.hpp"
#include "nclt/stats.hpp"
#include "nclt/types.hpp"

namespace nclt {

struct CurvePoint {
  long long N = 0;
  double var_hat = 0;
  double stderr_ = 0;
  long long replicas = 0;
};

enum class Verdict { PositiveLinearGrowth, BoundedCoboundary, Inconclusive };
const char* to_string(Verdict v);

// Finite-N classification cutoffs (the dichotomy is only asymptotic).
struct VerdictThresholds {
  double slope_sigmas = 3.0;   // slope must exceed this many standard errors
  double growth_ratio = 10.0;  // largest/smallest variance for linear growth
  double flat_ratio = 2.0;     // max/min ratio compatible with boundedness
};

// Unbiased sample variance of xi_N(1) per grid point, jackknife errors.
std::vector<CurvePoint> var_curve(const ProcessSpec& spec, const Observable& obs,
                                  const QProfile& qp,
                                  std::span<const long long> n_grid,
                                  long long replicas, std::uint64_t base_seed,
                                  int workers = 1);

// Var Sigma_N for Z_n = F(X^(1)(n),...,X^(ell)(ell n)) over ell independent
// copies of the process.
std::vector<CurvePoint> independent_copies_sigma(
    const ProcessSpec& spec, const Observable& obs,
    std::span<const long long> n_grid, long long replicas,
    std::uint64_t base_seed, int workers = 1);

// Per-component independent-copies sums at one N: variances of Sigma_{i,N}
// and standardized cross-covariances (mean product / its standard error).
struct ComponentSigma {
  long long N = 0;
  std::vector<double> var_hat;                    // per component
  std::vector<std::vector<double>> cross_z;       // [i][j], i < j
};
ComponentSigma independent_copies_components(const ProcessSpec& spec,
                                             const Decomposition& decomp,
                                             long long N, long long replicas,
                                             std::uint64_t base_seed,
                                             int workers = 1);

Verdict positivity_verdict(std::span<const CurvePoint> sigma_curve,
                           stats::LineFit* fit_out = nullptr,
                           const VerdictThresholds& th = {});

struct LogsqCheck {
  bool applicable = true;
  double C = 0;        // smallest C with var <= C N^{-1} ln^2 N on the grid
  bool stable = false; // top-half per-point constants within a factor 2
};
// Pass the xi_N(1) variance curve of a BoundedCoboundary case.
LogsqCheck logsq_bound_check(std::span<const CurvePoint> xi_curve,
                             Verdict matching_verdict);

struct DMatrixResult {
  int ell = 0, k = 0;
  std::vector<std::vector<double>> D;     // forced zeros for i!=j, max>k
  std::vector<std::vector<double>> D_se;
  double sigma0_sq = 0, sigma1_sq = 0, sigma_sq = 0;
};
DMatrixResult d_matrix(const ProcessSpec& spec, const Decomposition& decomp,
                       const QProfile& qp, long long N, long long replicas,
                       std::uint64_t base_seed, int workers = 1);

}  // namespace nclt
