#include "nclt/variance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nclt/rng.hpp"
#include "nclt/simulate.hpp"

namespace nclt {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::PositiveLinearGrowth:
      return "PositiveLinearGrowth";
    case Verdict::BoundedCoboundary:
      return "BoundedCoboundary";
    case Verdict::Inconclusive:
      return "Inconclusive";
  }
  return "?";
}

namespace {

void check_grid(std::span<const long long> n_grid, long long replicas) {
  if (n_grid.empty()) throw std::invalid_argument("empty N grid");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1])
      throw std::invalid_argument("N grid must be strictly increasing");
  if (replicas < 2) throw std::invalid_argument("replicas >= 2 required");
}

CurvePoint summarize(long long N, std::span<const double> samples) {
  CurvePoint p;
  p.N = N;
  p.replicas = static_cast<long long>(samples.size());
  p.var_hat = stats::sample_variance(samples);
  p.stderr_ = (samples.size() >= 3) ? stats::jackknife_se_variance(samples) : 0.0;
  return p;
}

}  // namespace

std::vector<CurvePoint> var_curve(const ProcessSpec& spec, const Observable& obs,
                                  const QProfile& qp,
                                  std::span<const long long> n_grid,
                                  long long replicas, std::uint64_t base_seed,
                                  int workers) {
  check_grid(n_grid, replicas);
  std::vector<CurvePoint> out;
  out.reserve(n_grid.size());
  for (long long N : n_grid) {
    auto samples = replicate(replicas, base_seed, workers, [&](SeedCoords sc) {
      return xi_full(spec, obs, qp, N, 1.0, sc).value;
    });
    out.push_back(summarize(N, samples));
  }
  return out;
}

std::vector<CurvePoint> independent_copies_sigma(
    const ProcessSpec& spec, const Observable& obs,
    std::span<const long long> n_grid, long long replicas,
    std::uint64_t base_seed, int workers) {
  check_grid(n_grid, replicas);
  const int ell = obs.ell;
  std::vector<CurvePoint> out;
  out.reserve(n_grid.size());
  for (long long N : n_grid) {
    auto samples = replicate(replicas, base_seed, workers, [&](SeedCoords sc) {
      std::vector<ProcessPath> copies;
      copies.reserve(static_cast<std::size_t>(ell));
      for (int c = 1; c <= ell; ++c)
        copies.emplace_back(spec, sc, rng::kCopyBase + static_cast<std::uint64_t>(c));
      std::vector<Pt> args(static_cast<std::size_t>(ell));
      double acc = 0;
      for (long long n = 1; n <= N; ++n) {
        for (int j = 1; j <= ell; ++j)
          args[static_cast<std::size_t>(j - 1)] =
              copies[static_cast<std::size_t>(j - 1)].value(static_cast<long long>(j) * n);
        acc += obs(args);
      }
      return acc;
    });
    out.push_back(summarize(N, samples));
  }
  return out;
}

ComponentSigma independent_copies_components(const ProcessSpec& spec,
                                             const Decomposition& decomp,
                                             long long N, long long replicas,
                                             std::uint64_t base_seed,
                                             int workers) {
  if (N < 1) throw std::invalid_argument("independent_copies_components: N >= 1");
  if (replicas < 3) throw std::invalid_argument("replicas >= 3 required");
  const int ell = decomp.ell();
  // per replica: vector of Sigma_{i,N}
  auto rows = replicate(replicas, base_seed, workers, [&](SeedCoords sc) {
    std::vector<ProcessPath> copies;
    copies.reserve(static_cast<std::size_t>(ell));
    for (int c = 1; c <= ell; ++c)
      copies.emplace_back(spec, sc, rng::kCopyBase + static_cast<std::uint64_t>(c));
    std::vector<Pt> args(static_cast<std::size_t>(ell));
    std::vector<double> sums(static_cast<std::size_t>(ell), 0.0);
    for (long long n = 1; n <= N; ++n) {
      for (int j = 1; j <= ell; ++j)
        args[static_cast<std::size_t>(j - 1)] =
            copies[static_cast<std::size_t>(j - 1)].value(static_cast<long long>(j) * n);
      for (int i = 1; i <= ell; ++i) {
        if (decomp.component_is_zero(i)) continue;
        sums[static_cast<std::size_t>(i - 1)] +=
            decomp.component(i, std::span<const Pt>(args.data(), static_cast<std::size_t>(i)));
      }
    }
    return sums;
  });

  ComponentSigma cs;
  cs.N = N;
  cs.var_hat.assign(static_cast<std::size_t>(ell), 0.0);
  cs.cross_z.assign(static_cast<std::size_t>(ell),
                    std::vector<double>(static_cast<std::size_t>(ell), 0.0));
  const std::size_t R = rows.size();
  std::vector<double> col_i(R), prod(R);
  for (int i = 0; i < ell; ++i) {
    for (std::size_t r = 0; r < R; ++r) col_i[r] = rows[r][static_cast<std::size_t>(i)];
    cs.var_hat[static_cast<std::size_t>(i)] = stats::sample_variance(col_i);
    for (int j = i + 1; j < ell; ++j) {
      for (std::size_t r = 0; r < R; ++r)
        prod[r] = rows[r][static_cast<std::size_t>(i)] * rows[r][static_cast<std::size_t>(j)];
      const double m = stats::mean(prod);
      const double se = stats::se_of_mean(prod);
      cs.cross_z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          (se > 0) ? m / se : 0.0;
    }
  }
  return cs;
}

Verdict positivity_verdict(std::span<const CurvePoint> curve,
                           stats::LineFit* fit_out,
                           const VerdictThresholds& th) {
  if (curve.size() < 4)
    throw std::invalid_argument("positivity_verdict: need >= 4 grid points");
  if (curve.back().N < 8 * curve.front().N)
    throw std::invalid_argument("positivity_verdict: grid must span a factor 8 in N");
  std::vector<double> x, y;
  double vmin = curve.front().var_hat, vmax = curve.front().var_hat;
  for (const auto& p : curve) {
    x.push_back(static_cast<double>(p.N));
    y.push_back(p.var_hat);
    vmin = std::min(vmin, p.var_hat);
    vmax = std::max(vmax, p.var_hat);
  }
  const auto fit = stats::ols(x, y);
  if (fit_out) *fit_out = fit;
  const bool grows = vmin > 0 ? (vmax / vmin > th.growth_ratio) : (vmax > 0);
  if (fit.slope > th.slope_sigmas * fit.slope_se && grows)
    return Verdict::PositiveLinearGrowth;
  const bool flat = (vmax == 0.0) || (vmin > 0 && vmax / vmin <= th.flat_ratio);
  if (flat && std::abs(fit.slope) <= th.slope_sigmas * std::max(fit.slope_se, 0.0))
    return Verdict::BoundedCoboundary;
  return Verdict::Inconclusive;
}

LogsqCheck logsq_bound_check(std::span<const CurvePoint> xi_curve,
                             Verdict matching_verdict) {
  LogsqCheck out;
  if (matching_verdict != Verdict::BoundedCoboundary) {
    out.applicable = false;
    return out;
  }
  if (xi_curve.empty()) throw std::invalid_argument("logsq_bound_check: empty curve");
  for (const auto& p : xi_curve)
    if (p.N < 2) throw std::invalid_argument("logsq_bound_check: grid needs N >= 2");
  std::vector<double> c;
  c.reserve(xi_curve.size());
  for (const auto& p : xi_curve) {
    const double ln = std::log(static_cast<double>(p.N));
    c.push_back(p.var_hat * static_cast<double>(p.N) / (ln * ln));
  }
  out.C = *std::max_element(c.begin(), c.end());
  const std::size_t half = xi_curve.size() / 2;
  double lo = c[half], hi = c[half];
  for (std::size_t i = half; i < c.size(); ++i) {
    lo = std::min(lo, c[i]);
    hi = std::max(hi, c[i]);
  }
  out.stable = (hi == 0.0) || (lo > 0 && hi / lo <= 2.0);
  return out;
}

DMatrixResult d_matrix(const ProcessSpec& spec, const Decomposition& decomp,
                       const QProfile& qp, long long N, long long replicas,
                       std::uint64_t base_seed, int workers) {
  if (replicas < 2) throw std::invalid_argument("d_matrix: replicas >= 2");
  const int ell = decomp.ell(), k = qp.k;
  // One shared path per replica: xi_component re-derives identical values
  // from the seed coordinates, so products are joint moments.
  auto rows = replicate(replicas, base_seed, workers, [&](SeedCoords sc) {
    std::vector<double> xi(static_cast<std::size_t>(ell));
    for (int i = 1; i <= ell; ++i)
      xi[static_cast<std::size_t>(i - 1)] =
          xi_component(spec, decomp, i, qp, N, 1.0, sc).value;
    return xi;
  });

  DMatrixResult res;
  res.ell = ell;
  res.k = k;
  res.D.assign(static_cast<std::size_t>(ell),
               std::vector<double>(static_cast<std::size_t>(ell), 0.0));
  res.D_se = res.D;
  const std::size_t R = rows.size();
  std::vector<double> prod(R);
  for (int i = 1; i <= ell; ++i) {
    for (int j = i; j <= ell; ++j) {
      const bool estimated = (j <= k) || (i == j);
      if (!estimated) continue;  // D_{i,j} = 0 forced for i != j, max > k
      for (std::size_t r = 0; r < R; ++r)
        prod[r] = rows[r][static_cast<std::size_t>(i - 1)] *
                  rows[r][static_cast<std::size_t>(j - 1)];
      const double m = stats::mean(prod);
      const double se = stats::se_of_mean(prod);
      res.D[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] = m;
      res.D[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - 1)] = m;
      res.D_se[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] = se;
      res.D_se[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - 1)] = se;
    }
  }
  double s0 = 0;
  for (int i = 1; i <= k; ++i)
    s0 += static_cast<double>(i) * res.D[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(i - 1)];
  for (int i = 1; i <= k; ++i)
    for (int j = i + 1; j <= k; ++j)
      s0 += 2.0 * static_cast<double>(i) *
            res.D[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
  double s1 = 0;
  for (int i = k + 1; i <= ell; ++i)
    s1 += res.D[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(i - 1)];
  res.sigma0_sq = s0;
  res.sigma1_sq = s1;
  res.sigma_sq = s0 + s1;
  return res;
}

}  // namespace nclt
