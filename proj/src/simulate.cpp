#include "nclt/simulate.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>

namespace nclt {

// ---------------------------------------------------------------------------
// ProcessPath
// ---------------------------------------------------------------------------

ProcessPath::ProcessPath(const ProcessSpec& spec, SeedCoords seed,
                         std::uint64_t stream)
    : spec_(&spec), key_{seed.base_seed, seed.replica, stream} {
  if (spec.kind == ProcessSpec::Kind::IidDiscrete) {
    cum_.reserve(spec.probs.size());
    double acc = 0;
    for (double p : spec.probs) {
      acc += p;
      cum_.push_back(acc);
    }
    cum_.back() = 1.0;
  } else if (spec.kind == ProcessSpec::Kind::FiniteMarkov) {
    pow2_.push_back(spec.transition);
  }
}

std::uint64_t ProcessPath::word(std::uint64_t q) {
  auto it = words_.find(q);
  if (it != words_.end()) return it->second;
  ++draws_;
  const std::uint64_t w = rng::draw(key_, q);
  words_.emplace(q, w);
  return w;
}

const std::vector<std::vector<double>>& ProcessPath::power_of_two(int level) {
  while (static_cast<int>(pow2_.size()) <= level) {
    const auto& a = pow2_.back();
    const std::size_t S = a.size();
    std::vector<std::vector<double>> sq(S, std::vector<double>(S, 0.0));
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t t = 0; t < S; ++t) {
        const double ait = a[i][t];
        if (ait == 0.0) continue;
        for (std::size_t j = 0; j < S; ++j) sq[i][j] += ait * a[t][j];
      }
    // keep rows stochastic against accumulated rounding
    for (auto& row : sq) {
      double s = 0;
      for (double& x : row) {
        if (x < 0) x = 0;
        s += x;
      }
      if (s > 0)
        for (double& x : row) x /= s;
    }
    pow2_.push_back(std::move(sq));
  }
  return pow2_[static_cast<std::size_t>(level)];
}

int ProcessPath::sample_state_from_row(std::span<const double> w,
                                       double u) const {
  double acc = 0;
  const std::size_t S = w.size();
  for (std::size_t s = 0; s + 1 < S; ++s) {
    acc += w[s];
    if (u < acc) return static_cast<int>(s);
  }
  return static_cast<int>(S - 1);
}

int ProcessPath::compute_state(long long n) {
  auto memo = states_.find(n);
  if (memo != states_.end()) return memo->second;

  int result;
  if (n == 0) {
    ++draws_;
    result = sample_state_from_row(spec_->stationary, rng::u01(key_, 0));
  } else {
    const int j = std::bit_width(static_cast<std::uint64_t>(n)) - 1;
    const long long lo = 1LL << j;
    if (n == lo) {
      // scaffold anchor: forward jump of 2^(j-1) (or 1 step from the origin)
      const long long prev = (j == 0) ? 0 : (1LL << (j - 1));
      const int level = (j == 0) ? 0 : j - 1;
      const int sp = compute_state(prev);
      const auto& P = power_of_two(level);
      ++draws_;
      result = sample_state_from_row(P[static_cast<std::size_t>(sp)],
                                     rng::u01(key_, static_cast<std::uint64_t>(n)));
    } else {
      // canonical bisection of [2^j, 2^(j+1)] down to n
      long long a = lo, b = 2 * lo;
      int sa = compute_state(a);
      int sb = compute_state(b);
      const std::size_t S = spec_->transition.size();
      std::vector<double> w(S);
      while (true) {
        const long long mid = a + (b - a) / 2;
        const long long h = (b - a) / 2;
        const int level = std::bit_width(static_cast<std::uint64_t>(h)) - 1;
        int sm;
        auto it = states_.find(mid);
        if (it != states_.end()) {
          sm = it->second;
        } else {
          const auto& P = power_of_two(level);
          double tot = 0;
          for (std::size_t s = 0; s < S; ++s) {
            w[s] = P[static_cast<std::size_t>(sa)][s] * P[s][static_cast<std::size_t>(sb)];
            tot += w[s];
          }
          for (std::size_t s = 0; s < S; ++s) w[s] /= tot;
          ++draws_;
          sm = sample_state_from_row(w, rng::u01(key_, static_cast<std::uint64_t>(mid)));
          states_.emplace(mid, sm);
        }
        if (mid == n) {
          result = sm;
          break;
        }
        if (n < mid) {
          b = mid;
          sb = sm;
        } else {
          a = mid;
          sa = sm;
        }
      }
    }
  }
  states_.emplace(n, result);
  return result;
}

Pt ProcessPath::compute_value(long long n) {
  switch (spec_->kind) {
    case ProcessSpec::Kind::IidDiscrete: {
      ++draws_;
      const double u = rng::u01(key_, static_cast<std::uint64_t>(n));
      const std::size_t S = cum_.size();
      std::size_t s = 0;
      while (s + 1 < S && u >= cum_[s]) ++s;
      return spec_->atoms[s];
    }
    case ProcessSpec::Kind::IidUniform01: {
      ++draws_;
      return Pt(rng::u01(key_, static_cast<std::uint64_t>(n)));
    }
    case ProcessSpec::Kind::FiniteMarkov:
      return spec_->state_values[static_cast<std::size_t>(compute_state(n))];
    case ProcessSpec::Kind::DoublingMap: {
      const int B = spec_->bits;
      const std::uint64_t i = static_cast<std::uint64_t>(n);
      const std::uint64_t qw = i >> 6, r = i & 63;
      std::uint64_t win = word(qw) << r;
      if (r != 0) win |= word(qw + 1) >> (64 - r);
      const std::uint64_t mant = win >> (64 - B);
      const double u = static_cast<double>(mant) * std::ldexp(1.0, -B);
      return Pt(map_observable(spec_->map_name, u));
    }
  }
  throw std::logic_error("unreachable");
}

Pt ProcessPath::value(long long n) {
  if (n < 0) throw std::invalid_argument("ProcessPath: index >= 0 required");
  auto it = values_.find(n);
  if (it != values_.end()) return it->second;
  const Pt v = compute_value(n);
  values_.emplace(n, v);
  return v;
}

int ProcessPath::state(long long n) {
  if (spec_->kind != ProcessSpec::Kind::FiniteMarkov)
    throw std::invalid_argument("ProcessPath::state: FiniteMarkov only");
  if (n < 0) throw std::invalid_argument("ProcessPath: index >= 0 required");
  return compute_state(n);
}

void ProcessPath::ensure(std::span<const long long> indices) {
  if (indices.empty())
    throw std::invalid_argument("ProcessPath::ensure: empty index set");
  values_.reserve(values_.size() + indices.size());
  for (long long n : indices) value(n);
}

// ---------------------------------------------------------------------------
// Conditional smoothing
// ---------------------------------------------------------------------------

Pt conditional_smoothing(const ProcessSpec& spec, ProcessPath& path,
                         long long n, long long r) {
  if (n < 0 || r < 0)
    throw std::invalid_argument("conditional_smoothing: n, r >= 0");
  switch (spec.kind) {
    case ProcessSpec::Kind::IidDiscrete:
    case ProcessSpec::Kind::IidUniform01:
    case ProcessSpec::Kind::FiniteMarkov:
      // X(n) is measurable w.r.t. the generating sigma-algebra at time n.
      return path.value(n);
    case ProcessSpec::Kind::DoublingMap: {
      const int B = spec.bits;
      if (r >= B) return path.value(n);
      // The window pins the first r+1 symbols of the shifted point: average
      // the map observable over that dyadic cell.
      const int g = static_cast<int>(r) + 1;
      const std::uint64_t i = static_cast<std::uint64_t>(n);
      const std::uint64_t qw = i >> 6, sh = i & 63;
      (void)path.value(n);  // the needed stream words are fetched exactly once
      std::uint64_t win = rng::draw(path.key(), qw) << sh;
      if (sh != 0) win |= rng::draw(path.key(), qw + 1) >> (64 - sh);
      const std::uint64_t cell = win >> (64 - g);
      const double width = std::ldexp(1.0, -g);
      const double lo = static_cast<double>(cell) * width;
      std::vector<double> t, w;
      gauss_legendre01(32, t, w);
      double acc = 0;
      for (std::size_t s = 0; s < t.size(); ++s)
        acc += w[s] * map_observable(spec.map_name, lo + t[s] * width);
      return Pt(acc);
    }
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Sums
// ---------------------------------------------------------------------------

namespace {

long long horizon_terms(long long N, double t) {
  return static_cast<long long>(std::floor(static_cast<double>(N) * t + 1e-9));
}

}  // namespace

SumSample xi_full(const ProcessSpec& spec, const Observable& obs,
                  const QProfile& qp, long long N, double t, SeedCoords seed) {
  if (N < 1) throw std::invalid_argument("xi_full: N >= 1");
  if (!(t > 0)) throw std::invalid_argument("xi_full: t > 0");
  if (!obs.centered) throw std::invalid_argument("xi_full: observable not centered");
  const int ell = qp.ell;
  const long long M = horizon_terms(N, t);
  SumSample out;
  out.N = N;
  out.t = t;
  out.kind = SumSample::Kind::Full;
  out.seed = seed;
  if (M < 1 || obs.kind == ObsKind::Zero) {
    out.value = 0.0;
    return out;
  }
  (void)qp.q(ell, M);  // overflow check before any allocation
  ProcessPath path(spec, seed);
  std::vector<long long> idx;
  idx.reserve(static_cast<std::size_t>(M) * static_cast<std::size_t>(ell));
  for (long long n = 1; n <= M; ++n)
    for (int j = 1; j <= ell; ++j) idx.push_back(qp.q(j, n));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  path.ensure(idx);

  std::vector<Pt> args(static_cast<std::size_t>(ell));
  double acc = 0;
  for (long long n = 1; n <= M; ++n) {
    for (int j = 1; j <= ell; ++j)
      args[static_cast<std::size_t>(j - 1)] = path.value(qp.q(j, n));
    acc += obs(args);
  }
  out.value = acc / std::sqrt(static_cast<double>(N));
  return out;
}

SumSample xi_component(const ProcessSpec& spec, const Decomposition& decomp,
                       int i, const QProfile& qp, long long N, double t,
                       SeedCoords seed) {
  if (i < 1 || i > qp.ell) throw std::invalid_argument("xi_component: bad i");
  if (N < 1) throw std::invalid_argument("xi_component: N >= 1");
  if (!(t > 0)) throw std::invalid_argument("xi_component: t > 0");
  SumSample out;
  out.N = N;
  out.t = t;
  out.kind = SumSample::Kind::Component;
  out.seed = seed;
  if (decomp.component_is_zero(i)) {
    out.value = 0.0;
    return out;
  }
  const long long M = (i <= qp.k)
                          ? horizon_terms(N, t / static_cast<double>(i))
                          : horizon_terms(N, t);
  if (M < 1) {
    out.value = 0.0;
    return out;
  }
  (void)qp.q(i, M);  // overflow check before any allocation
  ProcessPath path(spec, seed);
  std::vector<long long> idx;
  idx.reserve(static_cast<std::size_t>(M) * static_cast<std::size_t>(i));
  for (long long n = 1; n <= M; ++n)
    for (int j = 1; j <= i; ++j)
      idx.push_back(i <= qp.k ? j * n : qp.q(j, n));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  path.ensure(idx);

  std::vector<Pt> args(static_cast<std::size_t>(i));
  double acc = 0;
  for (long long n = 1; n <= M; ++n) {
    for (int j = 1; j <= i; ++j)
      args[static_cast<std::size_t>(j - 1)] =
          path.value(i <= qp.k ? j * n : qp.q(j, n));
    acc += decomp.component(i, args);
  }
  out.value = acc / std::sqrt(static_cast<double>(N));
  return out;
}

SumSample raw_sum_S_N(const ProcessSpec& spec, const Observable& obs,
                      long long N, SeedCoords seed) {
  if (!spec.iid()) throw std::invalid_argument("raw_sum_S_N: i.i.d. specs only");
  if (N < 1) throw std::invalid_argument("raw_sum_S_N: N >= 1");
  if (N > std::numeric_limits<long long>::max() / obs.ell)
    throw std::overflow_error("raw_sum_S_N: ell*N overflows");
  SumSample out;
  out.N = N;
  out.t = 1.0;
  out.kind = SumSample::Kind::Raw;
  out.seed = seed;
  if (obs.kind == ObsKind::Zero) {
    out.value = 0.0;
    return out;
  }
  const int ell = obs.ell;
  ProcessPath path(spec, seed);
  std::vector<long long> idx;
  idx.reserve(static_cast<std::size_t>(N) * static_cast<std::size_t>(ell));
  for (long long n = 1; n <= N; ++n)
    for (int j = 1; j <= ell; ++j) idx.push_back(j * n);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  path.ensure(idx);

  std::vector<Pt> args(static_cast<std::size_t>(ell));
  double acc = 0;
  for (long long n = 1; n <= N; ++n) {
    for (int j = 1; j <= ell; ++j)
      args[static_cast<std::size_t>(j - 1)] = path.value(j * n);
    acc += obs(args);
  }
  out.value = acc;
  return out;
}

}  // namespace nclt
