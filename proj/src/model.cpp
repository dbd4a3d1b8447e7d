#include "nclt/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nclt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kMomentTol = 1e-13;   // "analytically zero" moment threshold
constexpr double kCenterTol = 1e-8;    // default integration tolerance
}  // namespace

// ---------------------------------------------------------------------------
// AssumptionParams
// ---------------------------------------------------------------------------

ValidationResult validate_params(const AssumptionParams& a) {
  ValidationResult r;
  auto chk = [&](bool cond, const char* msg) {
    if (!cond) r.fail(msg);
  };
  chk(std::isfinite(a.p) && a.p >= 1, "p >= 1");
  chk(std::isfinite(a.q) && a.q >= 1, "q >= 1");
  chk(std::isfinite(a.b) && a.b >= 2, "b >= 2");
  chk(a.alpha >= 0, "alpha >= 0");
  chk(a.lambda >= 0, "lambda >= 0");
  chk(a.delta > 0, "delta > 0");
  chk(a.moment_m > 0, "m > 0");
  chk(a.iota > 0, "iota > 0");
  chk(a.kappa > 0 && a.kappa <= 1, "kappa in (0,1]");
  chk(a.K > 0, "K > 0");
  chk(a.ell >= 1, "ell >= 1");
  chk(a.k >= 1 && a.k <= a.ell, "k in [1,ell]");
  chk(a.wp >= 1, "wp >= 1");
  if (!r.ok) return r;

  if (!(a.delta < a.kappa - a.dim_d() / a.p))
    r.fail("delta < kappa - d/p violated (d = (ell-1)*wp)");
  if (!(1.0 / a.b >= 1.0 / a.p + (a.iota + 2.0) / a.moment_m + a.delta / a.q))
    r.fail("1/b >= 1/p + (iota+2)/m + delta/q violated");
  return r;
}

// ---------------------------------------------------------------------------
// QProfile
// ---------------------------------------------------------------------------

long long QProfile::q(int j, long long n) const {
  if (j < 1 || j > ell) throw std::out_of_range("QProfile::q: j out of range");
  if (j <= k) {
    if (n > std::numeric_limits<long long>::max() / j)
      throw std::overflow_error("QProfile::q: overflow");
    return static_cast<long long>(j) * n;
  }
  const auto& c = poly.at(static_cast<std::size_t>(j - k - 1));
  __int128 acc = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    acc = acc * n + *it;
    if (acc > std::numeric_limits<long long>::max() ||
        acc < std::numeric_limits<long long>::min())
      throw std::overflow_error("QProfile::q: overflow");
  }
  return static_cast<long long>(acc);
}

ValidationResult validate_q_profile(const QProfile& qp, long long horizon) {
  if (horizon < 2) throw std::invalid_argument("validate_q_profile: horizon >= 2");
  ValidationResult r;
  if (qp.k < 1 || qp.k > qp.ell) {
    r.fail("k in [1,ell] violated");
    return r;
  }
  if (static_cast<int>(qp.poly.size()) != qp.ell - qp.k) {
    r.fail("polynomial list must cover j = k+1..ell");
    return r;
  }
  for (int j = qp.k + 1; j <= qp.ell; ++j) {
    const auto& c = qp.poly[static_cast<std::size_t>(j - qp.k - 1)];
    if (c.size() < 3 || c.back() <= 0)
      r.fail("q_" + std::to_string(j) +
             ": integer polynomial needs degree >= 2 and positive leading coefficient");
  }
  if (qp.ell > qp.k && !(qp.gamma > 0 && qp.gamma < 1))
    r.fail("gamma in (0,1) required when j > k scales exist");

  long long first_incr = -1, first_cross = -1, first_order = -1;
  for (long long n = 1; n <= horizon; ++n) {
    const double ng = std::pow(static_cast<double>(n), qp.gamma);
    for (int j = qp.k + 1; j <= qp.ell; ++j) {
      if (first_incr < 0) {
        const long long inc = qp.q(j, n + 1) - qp.q(j, n);
        if (static_cast<double>(inc) < ng * (1.0 - 1e-12)) first_incr = n;
      }
      if (first_cross < 0) {
        const long long m =
            std::max<long long>(1, static_cast<long long>(std::ceil(ng - 1e-12)));
        if (qp.q(j, m) < qp.q(j - 1, n)) first_cross = n;
      }
    }
    if (first_order < 0) {
      for (int j = 2; j <= qp.ell; ++j) {
        const long long a = qp.q(j - 1, n), b = qp.q(j, n);
        if ((n == 1 && b < a) || (n > 1 && b <= a)) {
          first_order = n;
          break;
        }
      }
    }
  }
  if (first_incr >= 0)
    r.fail("increment q_j(n+1)-q_j(n) >= n^gamma first fails at n=" +
           std::to_string(first_incr));
  if (first_cross >= 0)
    r.fail("cross-scale q_j(ceil(n^gamma)) >= q_{j-1}(n) first fails at n=" +
           std::to_string(first_cross));
  if (first_order >= 0)
    r.fail("ordering q_j(n) > q_{j-1}(n) first fails at n=" +
           std::to_string(first_order));
  return r;
}

// ---------------------------------------------------------------------------
// MarginalLaw
// ---------------------------------------------------------------------------

void gauss_legendre01(int n, std::vector<double>& nodes,
                      std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre01: n >= 1");
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  // Newton iteration on P_n over [-1,1], then affine map to [0,1].
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);  // descending x -> ascending node
    weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * pp * pp);
  }
}

MarginalLaw MarginalLaw::discrete(std::vector<Pt> atoms,
                                  std::vector<double> probs) {
  if (atoms.empty() || atoms.size() != probs.size())
    throw std::invalid_argument("MarginalLaw::discrete: bad atom/prob sizes");
  double s = 0;
  for (double p : probs) {
    if (p < 0) throw std::invalid_argument("MarginalLaw::discrete: negative prob");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw std::invalid_argument("MarginalLaw::discrete: probs must sum to 1");
  MarginalLaw m;
  m.wp_ = atoms.front().dim;
  m.pts_ = std::move(atoms);
  m.wts_ = std::move(probs);
  return m;
}

MarginalLaw MarginalLaw::pushforward01(std::function<Pt(double)> map, int nodes,
                                       int wp) {
  if (nodes < 1) throw std::invalid_argument("MarginalLaw: need >= 1 node");
  std::vector<double> t, w;
  gauss_legendre01(nodes, t, w);
  MarginalLaw m;
  m.wp_ = wp;
  m.pts_.reserve(t.size());
  for (double ti : t) m.pts_.push_back(map(ti));
  m.wts_ = std::move(w);
  return m;
}

double MarginalLaw::integrate(const std::function<double(const Pt&)>& h) const {
  double acc = 0;
  for (std::size_t i = 0; i < pts_.size(); ++i) acc += wts_[i] * h(pts_[i]);
  return acc;
}

Pt MarginalLaw::mean() const {
  Pt m;
  m.dim = wp_;
  for (std::size_t i = 0; i < pts_.size(); ++i)
    for (int d = 0; d < wp_; ++d) m[d] += wts_[i] * pts_[i][d];
  return m;
}

// ---------------------------------------------------------------------------
// Observable
// ---------------------------------------------------------------------------

double Observable::operator()(std::span<const Pt> args) const {
  double v;
  switch (kind) {
    case ObsKind::Zero:
      return 0.0;
    case ObsKind::Identity:
      v = args[0][0];
      break;
    case ObsKind::Product: {
      v = args[0][0];
      for (std::size_t j = 1; j < args.size(); ++j) v *= args[j][0];
      break;
    }
    case ObsKind::Sum: {
      v = 0.0;
      for (const Pt& a : args) v += a[0];
      break;
    }
    case ObsKind::Cosine: {
      v = 0.0;
      for (const Pt& a : args) v += std::cos(kTwoPi * a[0]);
      break;
    }
    case ObsKind::Custom:
      v = fn(args);
      break;
    default:
      return 0.0;
  }
  return scale == 1.0 ? v : scale * v;
}

Observable Observable::registry(std::string_view name, int ell) {
  if (ell < 1) throw std::invalid_argument("Observable: ell >= 1");
  Observable o;
  o.ell = ell;
  o.name = std::string(name);
  if (name == "zero") {
    o.kind = ObsKind::Zero;
  } else if (name == "identity") {
    if (ell != 1) throw std::invalid_argument("identity observable needs ell=1");
    o.kind = ObsKind::Identity;
  } else if (name == "product") {
    o.kind = ObsKind::Product;
    o.iota = static_cast<double>(ell);
  } else if (name == "sum") {
    o.kind = ObsKind::Sum;
  } else if (name == "cosine") {
    o.kind = ObsKind::Cosine;
    o.K = static_cast<double>(ell);
  } else {
    throw std::invalid_argument("unknown observable: " + std::string(name));
  }
  return o;
}

Observable Observable::custom(int ell,
                              std::function<double(std::span<const Pt>)> f,
                              bool centered) {
  Observable o;
  o.kind = ObsKind::Custom;
  o.ell = ell;
  o.fn = std::move(f);
  o.centered = centered;
  o.name = "custom";
  return o;
}

Observable Observable::rescaled(double c) const {
  Observable o = *this;
  o.scale *= c;
  return o;
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

double Decomposition::integrate_suffix(std::span<const Pt> prefix,
                                       int from) const {
  std::vector<Pt> buf(static_cast<std::size_t>(ell_));
  for (int j = 0; j < from; ++j) buf[static_cast<std::size_t>(j)] = prefix[static_cast<std::size_t>(j)];
  const auto& pts = mu_->points();
  const auto& wts = mu_->weights();
  std::function<double(int)> rec = [&](int dim) -> double {
    if (dim == ell_) return obs_(std::span<const Pt>(buf.data(), buf.size()));
    double acc = 0;
    for (std::size_t r = 0; r < pts.size(); ++r) {
      buf[static_cast<std::size_t>(dim)] = pts[r];
      acc += wts[r] * rec(dim + 1);
    }
    return acc;
  };
  return rec(from);
}

double Decomposition::component(int i, std::span<const Pt> args) const {
  if (i < 1 || i > ell_) throw std::out_of_range("Decomposition: i out of range");
  if (static_cast<int>(args.size()) != i)
    throw std::invalid_argument("Decomposition: F_i wants exactly i arguments");
  switch (routes_[static_cast<std::size_t>(i - 1)]) {
    case Route::AnalyticZero:
      return 0.0;
    case Route::AnalyticSelf:
      return obs_(args);
    case Route::AnalyticCoordinate: {
      const double x = args[static_cast<std::size_t>(i - 1)][0];
      return obs_.scale == 1.0 ? x : obs_.scale * x;
    }
    case Route::AnalyticCosine: {
      const double c = std::cos(kTwoPi * args[static_cast<std::size_t>(i - 1)][0]);
      return obs_.scale == 1.0 ? c : obs_.scale * c;
    }
    case Route::Quadrature: {
      const double hi = integrate_suffix(args, i);
      const double lo = integrate_suffix(args.subspan(0, static_cast<std::size_t>(i - 1)), i - 1);
      return hi - lo;
    }
  }
  return 0.0;
}

bool Decomposition::component_is_zero(int i) const {
  return routes_[static_cast<std::size_t>(i - 1)] == Route::AnalyticZero;
}

double Decomposition::telescoped(std::span<const Pt> args) const {
  double t = 0.0;
  for (int i = 1; i <= ell_; ++i) {
    if (component_is_zero(i)) continue;
    t += component(i, args.subspan(0, static_cast<std::size_t>(i)));
  }
  return t;
}

Decomposition decompose_F(const Observable& obs, const MarginalLaw& mu,
                          int node_budget) {
  if (node_budget < 1)
    throw std::invalid_argument("decompose_F: integration budget < 1");
  Decomposition d;
  d.ell_ = obs.ell;
  d.obs_ = obs;
  d.mu_ = std::make_shared<MarginalLaw>(mu);

  // centering check (2.6): exact sum for discrete mu, quadrature otherwise
  if (obs.kind != ObsKind::Zero) {
    const double fbar = d.integrate_suffix({}, 0);
    if (std::abs(fbar) > kCenterTol)
      throw std::invalid_argument("decompose_F: observable not centered, |F-bar| = " +
                                  std::to_string(std::abs(fbar)));
  }

  const Pt mean = mu.mean();
  double max_mean = 0;
  for (int t = 0; t < mean.dim; ++t) max_mean = std::max(max_mean, std::abs(mean[t]));
  const bool mean_zero = max_mean <= kMomentTol;

  using Route = Decomposition::Route;
  auto all = [&](Route r) {
    d.routes_.assign(static_cast<std::size_t>(obs.ell), r);
  };
  switch (obs.kind) {
    case ObsKind::Zero:
      all(Route::AnalyticZero);
      break;
    case ObsKind::Identity:
      all(Route::AnalyticSelf);
      break;
    case ObsKind::Product:
      if (mean_zero) {
        all(Route::AnalyticZero);
        d.routes_.back() = Route::AnalyticSelf;
      } else {
        all(Route::Quadrature);
      }
      break;
    case ObsKind::Sum:
      all(mean_zero ? Route::AnalyticCoordinate : Route::Quadrature);
      break;
    case ObsKind::Cosine: {
      const double mc =
          mu.integrate([](const Pt& x) { return std::cos(kTwoPi * x[0]); });
      all(std::abs(mc) <= kMomentTol ? Route::AnalyticCosine : Route::Quadrature);
      break;
    }
    case ObsKind::Custom:
      all(Route::Quadrature);
      break;
  }
  return d;
}

double component_centering_residual(const Decomposition& d, int i,
                                    std::span<const Pt> prefix) {
  if (i < 1 || i > d.ell()) throw std::out_of_range("centering residual: bad i");
  if (static_cast<int>(prefix.size()) != i - 1)
    throw std::invalid_argument("centering residual: prefix arity mismatch");
  std::vector<Pt> args(prefix.begin(), prefix.end());
  args.emplace_back();
  const auto& pts = d.law().points();
  const auto& wts = d.law().weights();
  double acc = 0;
  for (std::size_t r = 0; r < pts.size(); ++r) {
    args.back() = pts[r];
    acc += wts[r] * d.component(i, args);
  }
  return acc;
}

}  // namespace nclt
