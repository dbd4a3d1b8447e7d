#include "nclt/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "nclt/simulate.hpp"
#include "nclt/stats.hpp"

namespace nclt {

int u_of_N(long long N, double lambda) {
  if (N < 1) throw std::invalid_argument("u_of_N: N >= 1");
  if (lambda < 0) throw std::invalid_argument("u_of_N: lambda >= 0");
  return static_cast<int>(std::floor(std::log2(static_cast<double>(N)) / (lambda + 8.0)));
}

double MartingaleApprox::representation_value() const {
  const double rootN = std::sqrt(static_cast<double>(N));
  if (mode == Mode::ExactIid) {
    // component-major order matching xi_full's accumulation
    double acc = 0;
    for (long long m = 1; m <= N; ++m) {
      double t = 0;
      for (int i = 1; i <= ell; ++i)
        t += W[static_cast<std::size_t>(i - 1)]
              [static_cast<std::size_t>(static_cast<long long>(i) * m - 1)];
      acc += t;
    }
    return acc / rootN;
  }
  double acc = 0;
  for (int i = 1; i <= ell; ++i) {
    const auto& row = W[static_cast<std::size_t>(i - 1)];
    const long long top = static_cast<long long>(i) * N;
    for (long long n = 1; n <= top; ++n) acc += row[static_cast<std::size_t>(n - 1)];
  }
  return acc / rootN;
}

MartingaleApprox build_exact_iid(const ProcessSpec& spec,
                                 const Decomposition& decomp,
                                 const QProfile& qp, long long N,
                                 SeedCoords seed) {
  if (!spec.iid()) throw std::invalid_argument("build_exact_iid: i.i.d. specs only");
  if (qp.k != qp.ell) throw std::invalid_argument("build_exact_iid: needs k = ell");
  if (N < 1) throw std::invalid_argument("build_exact_iid: N >= 1");
  const int ell = decomp.ell();
  MartingaleApprox ma;
  ma.mode = MartingaleApprox::Mode::ExactIid;
  ma.N = N;
  ma.ell = ell;
  ma.k = qp.k;
  ma.u = 0;
  const std::size_t len = static_cast<std::size_t>(ell) * static_cast<std::size_t>(N);
  ma.W.assign(static_cast<std::size_t>(ell), std::vector<double>(len, 0.0));
  ma.Y = ma.W;

  ProcessPath path(spec, seed);
  std::vector<long long> idx;
  idx.reserve(len);
  for (long long m = 1; m <= N; ++m)
    for (int j = 1; j <= ell; ++j) idx.push_back(static_cast<long long>(j) * m);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  path.ensure(idx);

  std::vector<Pt> args(static_cast<std::size_t>(ell));
  for (long long m = 1; m <= N; ++m) {
    for (int j = 1; j <= ell; ++j)
      args[static_cast<std::size_t>(j - 1)] = path.value(static_cast<long long>(j) * m);
    for (int i = 1; i <= ell; ++i) {
      if (decomp.component_is_zero(i)) continue;
      const double v = decomp.component(
          i, std::span<const Pt>(args.data(), static_cast<std::size_t>(i)));
      ma.W[static_cast<std::size_t>(i - 1)]
          [static_cast<std::size_t>(static_cast<long long>(i) * m - 1)] = v;
      ma.Y[static_cast<std::size_t>(i - 1)]
          [static_cast<std::size_t>(static_cast<long long>(i) * m - 1)] = v;
    }
  }
  ma.M.assign(len, 0.0);
  double run = 0;
  for (std::size_t n = 0; n < len; ++n) {
    for (int i = 0; i < ell; ++i) run += ma.W[static_cast<std::size_t>(i)][n];
    ma.M[n] = run;
  }
  return ma;
}

namespace {

// Dense transition powers memoized per gap.
class PowerCache {
 public:
  explicit PowerCache(const std::vector<std::vector<double>>& P) : base_(P) {}

  const std::vector<std::vector<double>>& get(long long g) {
    if (g == 1) return base_;
    auto it = memo_.find(g);
    if (it != memo_.end()) return it->second;
    std::vector<std::vector<double>> r;
    if (g % 2 == 0) {
      r = square(get(g / 2));
    } else {
      r = multiply(get(g - 1), base_);
    }
    return memo_.emplace(g, std::move(r)).first->second;
  }

 private:
  std::vector<std::vector<double>> square(const std::vector<std::vector<double>>& a) {
    return multiply(a, a);
  }
  std::vector<std::vector<double>> multiply(const std::vector<std::vector<double>>& a,
                                            const std::vector<std::vector<double>>& b) {
    const std::size_t S = a.size();
    std::vector<std::vector<double>> c(S, std::vector<double>(S, 0.0));
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t t = 0; t < S; ++t) {
        const double ait = a[i][t];
        if (ait == 0.0) continue;
        for (std::size_t j = 0; j < S; ++j) c[i][j] += ait * b[t][j];
      }
    return c;
  }
  std::vector<std::vector<double>> base_;
  std::map<long long, std::vector<std::vector<double>>> memo_;
};

// E(F_i(X(m),...,X(im)) | states up to v) for a finite chain: known argument
// times read off the path, unknown ones summed over state tuples with
// transition-power weights starting from the state at time v.
double cond_expectation(const ProcessSpec& spec, const Decomposition& decomp,
                        int i, long long m, long long v, ProcessPath& path,
                        PowerCache& pc, std::vector<Pt>& args) {
  const std::size_t S = spec.transition.size();
  int first_unknown = i + 1;
  for (int j = 1; j <= i; ++j) {
    const long long t = static_cast<long long>(j) * m;
    if (t <= v) {
      args[static_cast<std::size_t>(j - 1)] = path.value(t);
    } else {
      first_unknown = j;
      break;
    }
  }
  if (first_unknown > i) {
    // fully measurable
    return decomp.component(i, std::span<const Pt>(args.data(), static_cast<std::size_t>(i)));
  }
  const int r0 = first_unknown;
  std::function<double(int, long long, int)> rec =
      [&](int j, long long prev_t, int prev_state) -> double {
    if (j > i)
      return decomp.component(i, std::span<const Pt>(args.data(), static_cast<std::size_t>(i)));
    const long long t = static_cast<long long>(j) * m;
    const auto& P = pc.get(t - prev_t);
    double acc = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const double w = P[static_cast<std::size_t>(prev_state)][s];
      if (w == 0.0) continue;
      args[static_cast<std::size_t>(j - 1)] = spec.state_values[s];
      acc += w * rec(j + 1, t, static_cast<int>(s));
    }
    return acc;
  };
  return rec(r0, v, path.state(v));
}

}  // namespace

MartingaleApprox build_truncated_mixing(const ProcessSpec& spec,
                                        const Decomposition& decomp,
                                        const QProfile& qp, long long N,
                                        const AssumptionParams& params,
                                        double tol, SeedCoords seed,
                                        long long H_override,
                                        int state_tuple_cap) {
  if (spec.kind != ProcessSpec::Kind::FiniteMarkov)
    throw std::invalid_argument("build_truncated_mixing: FiniteMarkov only");
  if (qp.k != qp.ell)
    throw std::invalid_argument("build_truncated_mixing: needs k = ell");
  if (N < 1) throw std::invalid_argument("build_truncated_mixing: N >= 1");
  if (!(tol > 0)) throw std::invalid_argument("build_truncated_mixing: tol > 0");
  const int ell = decomp.ell();
  double tuples = 1;
  for (int i = 0; i < ell; ++i) tuples *= static_cast<double>(spec.n_states());
  if (tuples > state_tuple_cap)
    throw std::invalid_argument("build_truncated_mixing: |S|^ell exceeds the cap");

  const double rho2 = second_eigenvalue_modulus(spec.transition, spec.stationary);
  if (rho2 >= 1.0 - 1e-9)
    throw std::invalid_argument(
        "build_truncated_mixing: chain has no spectral gap (not aperiodic-irreducible)");

  const int u = u_of_N(N, params.lambda);
  const long long twou = 1LL << u;
  long long H;
  if (H_override >= 0) {
    H = H_override;
    const double tail =
        (rho2 == 0.0) ? 0.0
                      : std::pow(rho2, std::max(1.0, static_cast<double>(H - twou) /
                                                         static_cast<double>(ell)));
    if (tail > tol)
      throw std::invalid_argument(
          "build_truncated_mixing: truncation tail above tolerance at this H");
  } else {
    H = (rho2 == 0.0)
            ? twou + 1
            : twou + static_cast<long long>(ell) *
                         static_cast<long long>(std::ceil(std::log(tol) / std::log(rho2))) + 1;
  }

  MartingaleApprox ma;
  ma.mode = MartingaleApprox::Mode::TruncatedMixing;
  ma.N = N;
  ma.ell = ell;
  ma.k = qp.k;
  ma.u = u;
  ma.horizon = H;
  const long long len = static_cast<long long>(ell) * N;
  ma.W.assign(static_cast<std::size_t>(ell),
              std::vector<double>(static_cast<std::size_t>(len), 0.0));
  ma.Y = ma.W;

  ProcessPath path(spec, seed);
  std::vector<long long> idx;
  idx.reserve(static_cast<std::size_t>(len));
  for (long long n = 0; n <= len; ++n) idx.push_back(n);
  path.ensure(idx);
  PowerCache pc(spec.transition);

  std::vector<Pt> args(static_cast<std::size_t>(ell));
  // Y arrays
  for (int i = 1; i <= ell; ++i) {
    if (decomp.component_is_zero(i)) continue;
    for (long long mm = 1; mm <= N; ++mm) {
      for (int j = 1; j <= i; ++j)
        args[static_cast<std::size_t>(j - 1)] = path.value(static_cast<long long>(j) * mm);
      ma.Y[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(i * mm - 1)] =
          decomp.component(i, std::span<const Pt>(args.data(), static_cast<std::size_t>(i)));
    }
  }

  // R_{i,v} for v = 0..iN, then W = Y + R_v - R_{v-1}
  for (int i = 1; i <= ell; ++i) {
    if (decomp.component_is_zero(i)) continue;
    const long long top = static_cast<long long>(i) * N;
    std::vector<double> R(static_cast<std::size_t>(top) + 1, 0.0);
    for (long long v = 0; v <= top; ++v) {
      double acc = 0;
      // s = i*mm in (v, v+H]
      for (long long mm = v / i + 1; mm * i <= v + H; ++mm)
        acc += cond_expectation(spec, decomp, i, mm, v, path, pc, args);
      R[static_cast<std::size_t>(v)] = acc;
    }
    auto& Wi = ma.W[static_cast<std::size_t>(i - 1)];
    const auto& Yi = ma.Y[static_cast<std::size_t>(i - 1)];
    for (long long n = 1; n <= top; ++n)
      Wi[static_cast<std::size_t>(n - 1)] =
          Yi[static_cast<std::size_t>(n - 1)] + R[static_cast<std::size_t>(n)] -
          R[static_cast<std::size_t>(n - 1)];
  }

  ma.M.assign(static_cast<std::size_t>(len), 0.0);
  double run = 0;
  for (long long n = 1; n <= len; ++n) {
    for (int i = 0; i < ell; ++i)
      run += ma.W[static_cast<std::size_t>(i)][static_cast<std::size_t>(n - 1)];
    ma.M[static_cast<std::size_t>(n - 1)] = run;
  }
  return ma;
}

double quadratic_variation(const MartingaleApprox& ma, int i, int j) {
  if (i < 1 || j < i || j > ma.ell)
    throw std::out_of_range("quadratic_variation: need 1 <= i <= j <= ell");
  const long long top = static_cast<long long>(i) * ma.N;
  const auto& Wi = ma.W[static_cast<std::size_t>(i - 1)];
  const auto& Wj = ma.W[static_cast<std::size_t>(j - 1)];
  double acc = 0;
  for (long long n = 1; n <= top; ++n)
    acc += Wi[static_cast<std::size_t>(n - 1)] * Wj[static_cast<std::size_t>(n - 1)];
  return acc / static_cast<double>(ma.N);
}

double martingale_residual(
    const std::function<MartingaleApprox(std::uint64_t)>& build, int replicas) {
  if (replicas < 100) throw std::invalid_argument("martingale_residual: replicas >= 100");
  constexpr int kLags = 5;
  constexpr int kProbes = 2 * kLags + 3;  // W lags, Y lags, sign, sign pair, product
  std::vector<std::vector<double>> T(kProbes, std::vector<double>(static_cast<std::size_t>(replicas), 0.0));
  for (int r = 0; r < replicas; ++r) {
    const MartingaleApprox ma = build(static_cast<std::uint64_t>(r));
    const long long len = static_cast<long long>(ma.ell) * ma.N;
    std::vector<double> Wn(static_cast<std::size_t>(len), 0.0);
    std::vector<double> Yn(static_cast<std::size_t>(len), 0.0);
    for (long long n = 0; n < len; ++n)
      for (int i = 0; i < ma.ell; ++i) {
        Wn[static_cast<std::size_t>(n)] += ma.W[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)];
        Yn[static_cast<std::size_t>(n)] += ma.Y[static_cast<std::size_t>(i)][static_cast<std::size_t>(n)];
      }
    auto sgn = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
    std::vector<double> acc(kProbes, 0.0);
    long long count = 0;
    for (long long n = kLags; n < len; ++n) {
      const double w = Wn[static_cast<std::size_t>(n)];
      int p = 0;
      for (int lag = 1; lag <= kLags; ++lag)
        acc[static_cast<std::size_t>(p++)] += w * Wn[static_cast<std::size_t>(n - lag)];
      for (int lag = 1; lag <= kLags; ++lag)
        acc[static_cast<std::size_t>(p++)] += w * Yn[static_cast<std::size_t>(n - lag)];
      acc[static_cast<std::size_t>(p++)] += w * sgn(Wn[static_cast<std::size_t>(n - 1)]);
      acc[static_cast<std::size_t>(p++)] +=
          w * sgn(Wn[static_cast<std::size_t>(n - 1)]) * sgn(Wn[static_cast<std::size_t>(n - 2)]);
      acc[static_cast<std::size_t>(p++)] +=
          w * Wn[static_cast<std::size_t>(n - 1)] * Wn[static_cast<std::size_t>(n - 2)];
      ++count;
    }
    for (int p = 0; p < kProbes; ++p)
      T[static_cast<std::size_t>(p)][static_cast<std::size_t>(r)] =
          acc[static_cast<std::size_t>(p)] / static_cast<double>(count);
  }
  double worst = 0;
  for (int p = 0; p < kProbes; ++p) {
    const auto& col = T[static_cast<std::size_t>(p)];
    const double m = stats::mean(col);
    const double se = stats::se_of_mean(col);
    const double z = (se > 0) ? std::abs(m) / se : 0.0;
    worst = std::max(worst, z);
  }
  return worst;
}

Estimate approximation_gap(const ProcessSpec& spec, const Observable& obs,
                           const Decomposition& decomp, const QProfile& qp,
                           long long N, const AssumptionParams& params,
                           double tol, long long replicas,
                           std::uint64_t base_seed, int workers) {
  auto sq = replicate(replicas, base_seed, workers, [&](SeedCoords sc) {
    const MartingaleApprox ma =
        spec.iid() ? build_exact_iid(spec, decomp, qp, N, sc)
                   : build_truncated_mixing(spec, decomp, qp, N, params, tol, sc);
    const double xi = xi_full(spec, obs, qp, N, 1.0, sc).value;
    const double gap = xi - ma.representation_value();
    return gap * gap;
  });
  const double m = stats::mean(sq);
  const double se = (sq.size() >= 2) ? stats::se_of_mean(sq) : 0.0;
  return Estimate{std::sqrt(m), se};
}

}  // namespace nclt
