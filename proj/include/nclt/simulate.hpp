#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "nclt/model.hpp"
#include "nclt/process.hpp"
#include "nclt/rng.hpp"
#include "nclt/types.hpp"

namespace nclt {

// ---------------------------------------------------------------------------
// A lazily materialized path sample.  The value at index n is a pure function
// of (base_seed, replica, stream, n, spec): re-querying, re-ordering queries,
// or querying through a different index set all return identical values.
//
//  - i.i.d. kinds draw directly at counter n.
//  - DoublingMap reads bits n..n+B-1 of one counter-indexed bit stream, so
//    X(n) and X(m) share bits exactly when the windows overlap.
//  - FiniteMarkov samples a canonical dyadic scaffold (states at powers of
//    two, then exact conditional bridges at midpoints), with every jump a
//    power of two served from cached transition-matrix powers.
// ---------------------------------------------------------------------------
class ProcessPath {
 public:
  ProcessPath(const ProcessSpec& spec, SeedCoords seed,
              std::uint64_t stream = rng::kValueStream);

  void ensure(std::span<const long long> indices);
  Pt value(long long n);
  int state(long long n);  // FiniteMarkov only
  std::uint64_t rng_draws() const { return draws_; }
  const ProcessSpec& spec() const { return *spec_; }
  const rng::Key& key() const { return key_; }

 private:
  const ProcessSpec* spec_;
  rng::Key key_;
  std::unordered_map<long long, Pt> values_;
  std::unordered_map<long long, int> states_;
  std::unordered_map<std::uint64_t, std::uint64_t> words_;
  std::vector<double> cum_;  // discrete inverse-CDF table
  std::vector<std::vector<std::vector<double>>> pow2_;
  std::uint64_t draws_ = 0;

  std::uint64_t word(std::uint64_t q);
  const std::vector<std::vector<double>>& power_of_two(int level);
  int sample_state_from_row(std::span<const double> w, double u) const;
  int compute_state(long long n);
  Pt compute_value(long long n);
};

// Conditional smoothing of X(n) on a window of radius r.  Exact (returns
// X(n)) for kinds where X(n) is measurable at time n; for DoublingMap the
// average of the map observable over the dyadic cell pinned by the window.
Pt conditional_smoothing(const ProcessSpec& spec, ProcessPath& path,
                         long long n, long long r);

// ---------------------------------------------------------------------------
// Sum samples
// ---------------------------------------------------------------------------
struct SumSample {
  enum class Kind { Full, Component, Raw };
  double value = 0;
  long long N = 0;
  double t = 1.0;
  Kind kind = Kind::Full;
  SeedCoords seed;
};

// xi_N(t) = N^{-1/2} sum_{1<=n<=Nt} F(X(q_1(n)),...,X(q_ell(n)))
SumSample xi_full(const ProcessSpec& spec, const Observable& obs,
                  const QProfile& qp, long long N, double t, SeedCoords seed);

// Component sum xi_{i,N}(t); i <= k runs to [Nt/i] over (X(n),...,X(in)),
// i > k runs to [Nt] over (X(q_1(n)),...,X(q_i(n))).
SumSample xi_component(const ProcessSpec& spec, const Decomposition& decomp,
                       int i, const QProfile& qp, long long N, double t,
                       SeedCoords seed);

// Un-normalized S_N = sum_{n<=N} F(X(n),...,X(ell n)); i.i.d. kinds only.
SumSample raw_sum_S_N(const ProcessSpec& spec, const Observable& obs,
                      long long N, SeedCoords seed);

// ---------------------------------------------------------------------------
// Deterministic replication: the result is a pure function of
// (task, replicas, base_seed) regardless of `workers`.
// ---------------------------------------------------------------------------
template <class Task>
auto replicate(long long replicas, std::uint64_t base_seed, int workers,
               Task&& task)
    -> std::vector<std::invoke_result_t<Task&, SeedCoords>> {
  using R = std::invoke_result_t<Task&, SeedCoords>;
  if (replicas < 1) throw std::invalid_argument("replicate: replicas >= 1");
  std::vector<R> out(static_cast<std::size_t>(replicas));
  if (workers < 1) workers = 1;
  if (workers == 1) {
    for (long long r = 0; r < replicas; ++r)
      out[static_cast<std::size_t>(r)] =
          task(SeedCoords{base_seed, static_cast<std::uint64_t>(r)});
    return out;
  }
  std::atomic<long long> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  auto run = [&]() {
    for (;;) {
      const long long r = next.fetch_add(1);
      if (r >= replicas || failed.load()) break;
      try {
        out[static_cast<std::size_t>(r)] =
            task(SeedCoords{base_seed, static_cast<std::uint64_t>(r)});
      } catch (...) {
        if (!failed.exchange(true)) err = std::current_exception();
        break;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& th : pool) th.join();
  if (failed.load()) std::rethrow_exception(err);
  return out;
}

}  // namespace nclt
