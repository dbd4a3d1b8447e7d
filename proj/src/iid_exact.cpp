#include "nclt/iid_exact.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "nclt/simulate.hpp"
#include "nclt/stats.hpp"

namespace nclt {

std::vector<long long> primes_up_to(int ell) {
  if (ell < 2) throw std::invalid_argument("primes_up_to: ell >= 2");
  std::vector<bool> sieve(static_cast<std::size_t>(ell) + 1, true);
  std::vector<long long> out;
  for (int p = 2; p <= ell; ++p) {
    if (!sieve[static_cast<std::size_t>(p)]) continue;
    out.push_back(p);
    for (int q = 2 * p; q <= ell; q += p) sieve[static_cast<std::size_t>(q)] = false;
  }
  return out;
}

std::vector<long long> a_set(long long N, std::span<const long long> primes) {
  if (N < 1) throw std::invalid_argument("a_set: N >= 1");
  std::vector<long long> out;
  for (long long a = 1; a <= N; ++a) {
    bool coprime = true;
    for (long long p : primes)
      if (a % p == 0) {
        coprime = false;
        break;
      }
    if (coprime) out.push_back(a);
  }
  return out;
}

std::vector<long long> block(long long a, long long N,
                             std::span<const long long> primes) {
  for (long long p : primes)
    if (a % p == 0)
      throw std::invalid_argument("block: a must be coprime to the primes");
  if (a < 1 || a > N) throw std::invalid_argument("block: need 1 <= a <= N");
  std::vector<long long> out;
  // bounded DFS over exponent vectors
  auto gen = [&](auto&& self, long long cur, std::size_t idx) -> void {
    out.push_back(cur);
    for (std::size_t i = idx; i < primes.size(); ++i)
      if (cur <= N / primes[i]) self(self, cur * primes[i], i);
  };
  gen(gen, a, 0);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BigInt> smooth_products(int count,
                                    std::span<const long long> primes) {
  if (count < 1) throw std::invalid_argument("smooth_products: count >= 1");
  if (primes.empty()) throw std::invalid_argument("smooth_products: no primes");
  std::vector<BigInt> out;
  out.reserve(static_cast<std::size_t>(count));
  std::set<BigInt> frontier;
  frontier.insert(BigInt(1));
  while (static_cast<int>(out.size()) < count) {
    auto it = frontier.begin();
    BigInt v = *it;
    frontier.erase(it);
    for (long long p : primes) frontier.insert(v * p);
    out.push_back(std::move(v));
  }
  return out;
}

long long count_products_leq(const BigInt& M, std::span<const long long> primes) {
  if (M < 1) return 0;
  long long count = 0;
  auto gen = [&](auto&& self, const BigInt& cur, std::size_t idx) -> void {
    ++count;
    for (std::size_t i = idx; i < primes.size(); ++i) {
      BigInt next = cur * primes[i];
      if (next <= M) self(self, next, i);
    }
  };
  gen(gen, BigInt(1), 0);
  return count;
}

namespace {

// floor(e^rho) with a relative boundary guard, as an exact integer.
BigInt integer_threshold(double rho) {
  const double x = std::exp(rho) * (1.0 + 1e-12);
  if (!std::isfinite(x)) throw std::overflow_error("lattice_count: rho too large");
  if (x < 1.0) return BigInt(0);
  int e = 0;
  const double m = std::frexp(x, &e);  // x = m * 2^e, m in [0.5, 1)
  const long long mant = static_cast<long long>(std::floor(std::ldexp(m, 53)));
  BigInt v(mant);
  if (e >= 53)
    v <<= (e - 53);
  else
    v >>= (53 - e);
  return v;
}

}  // namespace

long long lattice_count(double rho, std::span<const long long> primes) {
  if (!(rho >= 0)) throw std::invalid_argument("lattice_count: rho >= 0");
  return count_products_leq(integer_threshold(rho), primes);
}

RhoTable rho_table(int L, std::span<const long long> primes) {
  if (L < 1) throw std::invalid_argument("rho_table: L >= 1");
  RhoTable t;
  t.products = smooth_products(L + 1, primes);
  t.logs.reserve(t.products.size());
  for (const BigInt& p : t.products)
    t.logs.push_back(std::log(p.convert_to<double>()));
  return t;
}

double c_ell(std::span<const long long> primes) {
  if (primes.empty()) throw std::invalid_argument("c_ell: no primes");
  return 1.0 - coprime_density(primes);
}

double coprime_density(std::span<const long long> primes) {
  double prod = 1.0;
  for (long long p : primes) prod *= 1.0 - 1.0 / static_cast<double>(p);
  return prod;
}

std::vector<long long> canonical_block(int l, std::span<const long long> primes) {
  if (l < 1) throw std::invalid_argument("canonical_block: l >= 1");
  const auto prods = smooth_products(l, primes);
  std::vector<long long> out;
  out.reserve(static_cast<std::size_t>(l));
  const BigInt cap = BigInt(1) << 62;
  for (const BigInt& p : prods) {
    if (p > cap) throw std::overflow_error("canonical_block: block value exceeds 2^62");
    out.push_back(p.convert_to<long long>());
  }
  return out;
}

std::vector<long long> canonical_block_indices(int l,
                                               std::span<const long long> primes,
                                               int ell) {
  if (ell < 1) throw std::invalid_argument("canonical_block_indices: ell >= 1");
  const auto blk = canonical_block(l, primes);
  std::vector<long long> idx;
  idx.reserve(blk.size() * static_cast<std::size_t>(ell));
  for (long long b : blk)
    for (int s = 1; s <= ell; ++s) idx.push_back(static_cast<long long>(s) * b);
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

Estimate estimate_R_l(const Observable& obs, const ProcessSpec& spec, int l,
                      long long replicas, std::uint64_t base_seed, int workers) {
  if (!spec.iid()) throw std::invalid_argument("estimate_R_l: i.i.d. specs only");
  if (!obs.centered) throw std::invalid_argument("estimate_R_l: observable not centered");
  if (replicas < 3) throw std::invalid_argument("estimate_R_l: replicas >= 3");
  const auto primes = primes_up_to(obs.ell);
  const auto blk = canonical_block(l, primes);
  const auto support = canonical_block_indices(l, primes, obs.ell);
  const int ell = obs.ell;

  auto task = [&](SeedCoords sc) -> double {
    ProcessPath path(spec, sc);
    path.ensure(support);
    std::vector<Pt> args(static_cast<std::size_t>(ell));
    double s = 0;
    for (long long b : blk) {
      for (int j = 1; j <= ell; ++j)
        args[static_cast<std::size_t>(j - 1)] = path.value(static_cast<long long>(j) * b);
      s += obs(args);
    }
    return s * s;
  };
  const auto sq = replicate(replicas, base_seed, workers, task);
  return Estimate{stats::mean(sq), stats::se_of_mean(sq)};
}

SigmaSeries sigma_series(const Observable& obs, const ProcessSpec& spec, int L,
                         long long replicas, std::uint64_t base_seed,
                         int workers) {
  if (L < 1) throw std::invalid_argument("sigma_series: L >= 1");
  const auto primes = primes_up_to(obs.ell);
  const int m = static_cast<int>(primes.size());
  const auto table = rho_table(L, primes);

  SigmaSeries s;
  s.L = L;
  s.c_ell = c_ell(primes);
  s.density = coprime_density(primes);

  // moment estimates d^2 = E F^2 and r^3 = E|F|^3 at indices (1,...,ell)
  {
    std::vector<long long> idx;
    for (int j = 1; j <= obs.ell; ++j) idx.push_back(j);
    auto task = [&](SeedCoords sc) -> Pt {
      ProcessPath path(spec, sc);
      path.ensure(idx);
      std::vector<Pt> args;
      args.reserve(idx.size());
      for (long long j : idx) args.push_back(path.value(j));
      const double f = obs(args);
      return Pt(f * f, std::abs(f * f * f));
    };
    const auto mom = replicate(replicas, base_seed, workers, task);
    std::vector<double> f2(mom.size()), f3(mom.size());
    for (std::size_t i = 0; i < mom.size(); ++i) {
      f2[i] = mom[i][0];
      f3[i] = mom[i][1];
    }
    s.d_sq = stats::mean(f2);
    s.d_sq_se = stats::se_of_mean(f2);
    s.r_cubed = stats::mean(f3);
  }
  if (!(s.d_sq > 0))
    throw std::invalid_argument("sigma_series: degenerate observable, d^2 <= 0");

  double mc_var = 0;
  for (int l = 1; l <= L; ++l) {
    const std::uint64_t seed_l =
        rng::mix64(base_seed ^ (0xA0761D6478BD642Full * static_cast<std::uint64_t>(l)));
    const Estimate Rl =
        (l == 1) ? Estimate{s.d_sq, s.d_sq_se}
                 : estimate_R_l(obs, spec, l, replicas, seed_l, workers);
    const double rmin = table.rho_min(l), rmax = table.rho_max(l);
    const double w = std::exp(-rmin) - std::exp(-rmax);
    s.rho_min.push_back(rmin);
    s.rho_max.push_back(rmax);
    s.weight.push_back(w);
    s.R.push_back(Rl.value);
    s.R_se.push_back(Rl.se);
    s.term.push_back(s.density * w * Rl.value);
    s.partial_sum += s.term.back();
    mc_var += (s.density * w * Rl.se) * (s.density * w * Rl.se);
  }
  s.mc_se = std::sqrt(mc_var);

  // tail: density * d^2 * sum_{l>L} l^2 * 2^{-(l^{1/m}-1)}
  double tail = 0;
  const double ln2 = std::log(2.0);
  for (long long l = L + 1; l < 20000000; ++l) {
    const double term =
        static_cast<double>(l) * static_cast<double>(l) *
        std::exp(-(std::pow(static_cast<double>(l), 1.0 / m) - 1.0) * ln2);
    tail += term;
    if (term < tail * 1e-16 + 1e-300) break;
  }
  s.tail_bound = s.density * s.d_sq * tail;

  s.sigma_sq = s.partial_sum;
  s.bracket_lo = 0.5 * s.c_ell * s.d_sq;
  s.bracket_hi = static_cast<double>(obs.ell) * static_cast<double>(obs.ell) * s.d_sq;
  const double unc = s.mc_se + s.tail_bound;
  s.bracket_ok = (s.sigma_sq + unc >= s.bracket_lo) && (s.sigma_sq - unc <= s.bracket_hi);
  return s;
}

double berry_esseen_bound(long long N, int m, double d, double r) {
  if (N < 1) throw std::invalid_argument("berry_esseen_bound: N >= 1");
  if (!(d > 0)) throw std::invalid_argument("berry_esseen_bound: d > 0");
  const double lg = std::log2(static_cast<double>(N));
  const double num = std::pow(1.0 + lg, 3.0 * m) * std::max(r * r * r, 1.0);
  const double den = d * std::min(d * d, 1.0) * std::sqrt(static_cast<double>(N));
  return num / den;
}

}  // namespace nclt
