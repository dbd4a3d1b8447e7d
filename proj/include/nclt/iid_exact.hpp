#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <span>
#include <vector>

#include "nclt/model.hpp"
#include "nclt/process.hpp"
#include "nclt/types.hpp"

namespace nclt {

using BigInt = boost::multiprecision::cpp_int;

std::vector<long long> primes_up_to(int ell);

// {1 <= a <= N : a coprime to every listed prime}
std::vector<long long> a_set(long long N, std::span<const long long> primes);

// {b <= N : b = a * prod primes^d}, ascending.  a must be coprime.
std::vector<long long> block(long long a, long long N,
                             std::span<const long long> primes);

// First `count` products of the primes (ascending, starting at 1).  Unique
// factorization makes them distinct, so the count/rho tables step by one.
std::vector<BigInt> smooth_products(int count, std::span<const long long> primes);

// Exact count of exponent vectors with prod primes^n_i <= M.
long long count_products_leq(const BigInt& M, std::span<const long long> primes);

// |D(rho)| for a real rho >= 0.  The integer threshold floor(e^rho) is taken
// with a relative boundary guard so thresholds that are logs of exact
// products resolve to those products.
long long lattice_count(double rho, std::span<const long long> primes);

// rho-interval table: rho_min(l)/rho_max(l) are logs of exact integer
// products; equality rho_max(l) = rho_min(l+1) holds on the integers.
struct RhoTable {
  std::vector<BigInt> products;  // products[l] = (l+1)-th smallest, l = 0..L
  std::vector<double> logs;

  int L() const { return static_cast<int>(products.size()) - 1; }
  double rho_min(int l) const { return logs.at(static_cast<std::size_t>(l - 1)); }
  double rho_max(int l) const { return logs.at(static_cast<std::size_t>(l)); }
  const BigInt& product_min(int l) const { return products.at(static_cast<std::size_t>(l - 1)); }
  const BigInt& product_max(int l) const { return products.at(static_cast<std::size_t>(l)); }
};
RhoTable rho_table(int L, std::span<const long long> primes);

// 1 - prod(1 - 1/l_k)
double c_ell(std::span<const long long> primes);
// prod(1 - 1/l_k): the density of the coprime residue set A_N, and the
// prefactor of the sigma series.
double coprime_density(std::span<const long long> primes);

// The l smallest products (the canonical block with a = 1) ...
std::vector<long long> canonical_block(int l, std::span<const long long> primes);
// ... together with all multiples s*b, s = 1..ell: the index support needed
// to simulate one block sum of size exactly l.
std::vector<long long> canonical_block_indices(int l,
                                               std::span<const long long> primes,
                                               int ell);

// Monte Carlo estimate of R_l = E (sum over the canonical block of
// F(X(b),...,X(ell b)))^2; colliding indices share one sampled value.
Estimate estimate_R_l(const Observable& obs, const ProcessSpec& spec, int l,
                      long long replicas, std::uint64_t base_seed, int workers);

struct SigmaSeries {
  double c_ell = 0;
  double density = 0;  // series prefactor
  double d_sq = 0, d_sq_se = 0;
  double r_cubed = 0;
  int L = 0;
  std::vector<double> rho_min, rho_max, weight, R, R_se, term;
  double partial_sum = 0;
  double tail_bound = 0;
  double mc_se = 0;
  double sigma_sq = 0;
  double bracket_lo = 0, bracket_hi = 0;
  bool bracket_ok = false;
};

// sigma^2 = density * sum_{l<=L} (e^{-rho_min(l)} - e^{-rho_max(l)}) R_l with
// a rigorous truncation tail from R_l <= l^2 d^2 and
// rho_min(l) >= (l^{1/m}-1) ln 2.
SigmaSeries sigma_series(const Observable& obs, const ProcessSpec& spec, int L,
                         long long replicas, std::uint64_t base_seed,
                         int workers);

// (1+log2 N)^{3m} * max(r^3,1) / (d * min(d^2,1) * sqrt(N))
double berry_esseen_bound(long long N, int m, double d, double r);

}  // namespace nclt
