#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nclt/model.hpp"
#include "nclt/process.hpp"
#include "nclt/types.hpp"

namespace nclt {

// u(N) = floor(log2(N) / (lambda + 8))
int u_of_N(long long N, double lambda);

// Martingale-array approximation of sqrt(N) * xi_N(1).
//
// ExactIid: W_{i,n} = F_i(X(m),...,X(im)) at n = im <= iN (zero elsewhere);
// the array is an exact martingale and the representation reproduces xi_N(1)
// bitwise from the shared path.
//
// TruncatedMixing (FiniteMarkov): W_{i,n} = Y_{i,n} + R_{i,n} - R_{i,n-1}
// with R_{i,v} = sum_{v < s <= v+H} E(Y_{i,s} | path up to v), conditional
// expectations evaluated exactly by transition-power sums over state tuples
// and the series truncated at the spectral-gap horizon H.  Smoothing is exact
// for finite chains, so the dyadic window enters only through u; the
// filtration offset is collapsed to zero, which makes an i.i.d.-equivalent
// chain reproduce the ExactIid array.
struct MartingaleApprox {
  enum class Mode { ExactIid, TruncatedMixing };
  Mode mode = Mode::ExactIid;
  long long N = 0;
  int ell = 1;
  int k = 1;
  int u = 0;
  long long horizon = 0;                // mixing-mode R-series truncation
  std::vector<std::vector<double>> W;   // W[i-1][n-1], n = 1..ell*N
  std::vector<std::vector<double>> Y;   // unsmoothed summands, same layout
  std::vector<double> M;                // prefix sums of W_n = sum_i W_{i,n}

  // M_{ell N} / sqrt(N).  In ExactIid mode the accumulation mirrors
  // xi_full's term order, so the identity with xi_N(1) is bitwise.
  double representation_value() const;
};

MartingaleApprox build_exact_iid(const ProcessSpec& spec,
                                 const Decomposition& decomp,
                                 const QProfile& qp, long long N,
                                 SeedCoords seed);

// tol controls the R-series tail; H_override < 0 picks
// H = 2^u + ell * ceil(ln tol / ln rho2) from the chain's spectral gap.
// Errors: non-FiniteMarkov spec, k < ell, state-tuple cap exceeded, no
// spectral gap, or an explicit H whose tail estimate exceeds tol.
MartingaleApprox build_truncated_mixing(const ProcessSpec& spec,
                                        const Decomposition& decomp,
                                        const QProfile& qp, long long N,
                                        const AssumptionParams& params,
                                        double tol, SeedCoords seed,
                                        long long H_override = -1,
                                        int state_tuple_cap = 4096);

// (1/N) sum_{n<=iN} W_{i,n} W_{j,n}
double quadratic_variation(const MartingaleApprox& ma, int i, int j);

// Max standardized correlation between W_n and fixed bounded functionals of
// the past (W and Y lags 1..5, signs, pairwise products) over replicas of
// the array; the martingale property passes at <= 4.
double martingale_residual(
    const std::function<MartingaleApprox(std::uint64_t replica)>& build,
    int replicas);

// Replica RMS of |xi_N(1) - M_{ell N}/sqrt(N)|.
Estimate approximation_gap(const ProcessSpec& spec, const Observable& obs,
                           const Decomposition& decomp, const QProfile& qp,
                           long long N, const AssumptionParams& params,
                           double tol, long long replicas,
                           std::uint64_t base_seed, int workers = 1);

}  // namespace nclt
