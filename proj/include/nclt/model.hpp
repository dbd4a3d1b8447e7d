#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nclt/types.hpp"

namespace nclt {

// ---------------------------------------------------------------------------
// Initial parameter set with its two admissibility inequalities.
// ---------------------------------------------------------------------------
struct AssumptionParams {
  double p = 2;
  double q = 2;
  double b = 2;
  double alpha = 0;
  double lambda = 0;
  double delta = 0.5;
  double moment_m = 4;
  double iota = 1;
  double kappa = 1;
  double K = 1;
  int ell = 1;
  int k = 1;
  int wp = 1;

  double dim_d() const { return static_cast<double>(ell - 1) * wp; }
};

// Never aborts; names every violated inequality.
ValidationResult validate_params(const AssumptionParams& a);

// ---------------------------------------------------------------------------
// Time-scale profile q_1 < q_2 < ... < q_ell.  q_j(n) = j*n for j <= k; above
// k an integer polynomial (coefficients low to high degree).
// ---------------------------------------------------------------------------
struct QProfile {
  int k = 1;
  int ell = 1;
  // poly[j - k - 1] holds the coefficients of q_j for j > k.
  std::vector<std::vector<long long>> poly;
  double gamma = 0.5;

  long long q(int j, long long n) const;

  static QProfile linear(int ell) {
    QProfile p;
    p.k = p.ell = ell;
    return p;
  }
};

// Finite-horizon checks: q_j(n+1)-q_j(n) >= n^gamma and
// q_j(ceil(n^gamma)) >= q_{j-1}(n) for j > k, plus strict ordering
// q_j(n) > q_{j-1}(n).  Reports the first failing n per check.
ValidationResult validate_q_profile(const QProfile& qp, long long horizon);

// ---------------------------------------------------------------------------
// Marginal law handle.  Either a discrete atom list or the pushforward of
// Lebesgue on [0,1] under a map (realized by fixed Gauss-Legendre nodes so
// repeated integrations agree bit for bit).
// ---------------------------------------------------------------------------
class MarginalLaw {
 public:
  static MarginalLaw discrete(std::vector<Pt> atoms, std::vector<double> probs);
  static MarginalLaw pushforward01(std::function<Pt(double)> map, int nodes,
                                   int wp = 1);

  // Stored integration nodes (point, weight); weights sum to 1.
  const std::vector<Pt>& points() const { return pts_; }
  const std::vector<double>& weights() const { return wts_; }
  int wp() const { return wp_; }

  double integrate(const std::function<double(const Pt&)>& h) const;
  Pt mean() const;

 private:
  std::vector<Pt> pts_;
  std::vector<double> wts_;
  int wp_ = 1;
};

// Gauss-Legendre nodes/weights on [0,1].
void gauss_legendre01(int n, std::vector<double>& nodes,
                      std::vector<double>& weights);

// ---------------------------------------------------------------------------
// Observable F with growth metadata.  Registry entries are dispatched on an
// enum so the hot evaluation loops stay cheap; arbitrary evaluators go
// through Custom.
// ---------------------------------------------------------------------------
enum class ObsKind { Zero, Identity, Product, Sum, Cosine, Custom };

struct Observable {
  ObsKind kind = ObsKind::Zero;
  int ell = 1;
  int wp = 1;
  double K = 1;
  double iota = 1;
  double kappa = 1;
  bool centered = true;
  double scale = 1.0;  // multiplies the evaluator
  std::function<double(std::span<const Pt>)> fn;  // Custom only
  std::string name = "zero";

  double operator()(std::span<const Pt> args) const;

  // Registry lookup ("zero", "identity", "product", "sum", "cosine").
  static Observable registry(std::string_view name, int ell);
  static Observable custom(int ell, std::function<double(std::span<const Pt>)> f,
                           bool centered = true);
  Observable rescaled(double c) const;
};

// ---------------------------------------------------------------------------
// Telescoping decomposition F = F_1 + ... + F_ell with last-coordinate
// centering.  Components are analytic for registry observables over laws with
// the needed vanishing moments and quadrature-backed otherwise.
// ---------------------------------------------------------------------------
class Decomposition {
 public:
  int ell() const { return ell_; }

  // F_i(args[0..i)): exactly i arguments.
  double component(int i, std::span<const Pt> args) const;

  // True when component i is identically zero (skips work in sum loops).
  bool component_is_zero(int i) const;

  // Evaluates sum_{i} F_i(args[0..i)) with the same accumulation order as the
  // source observable's evaluator, so analytic decompositions reproduce F
  // bitwise.
  double telescoped(std::span<const Pt> args) const;

  const MarginalLaw& law() const { return *mu_; }

 private:
  friend Decomposition decompose_F(const Observable& obs, const MarginalLaw& mu,
                                   int node_budget);
  enum class Route { AnalyticZero, AnalyticSelf, AnalyticCoordinate,
                     AnalyticCosine, Quadrature };
  int ell_ = 1;
  Observable obs_;
  std::vector<Route> routes_;
  std::shared_ptr<const MarginalLaw> mu_;

  double integrate_suffix(std::span<const Pt> prefix, int from) const;
};

// Errors: non-centered observable (|int F dmu^ell| > 1e-8), budget < 1.
Decomposition decompose_F(const Observable& obs, const MarginalLaw& mu,
                          int node_budget);

// int F_i(prefix, x) dmu(x) with the decomposition's stored nodes.
double component_centering_residual(const Decomposition& d, int i,
                                    std::span<const Pt> prefix);

}  // namespace nclt
