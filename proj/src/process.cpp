#include "nclt/process.hpp"

#include <cmath>
#include <stdexcept>

namespace nclt {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double map_observable(std::string_view name, double x) {
  if (name == "cos") return std::cos(kTwoPi * x);
  if (name == "sin") return std::sin(kTwoPi * x);
  // g(Tx) - g(x) with g = cos(2*pi*x); sums over orbits telescope.
  if (name == "coboundary_cos")
    return std::cos(2.0 * kTwoPi * x) - std::cos(kTwoPi * x);
  throw std::invalid_argument("unknown map observable: " + std::string(name));
}

int ProcessSpec::wp() const {
  switch (kind) {
    case Kind::IidDiscrete:
      return atoms.front().dim;
    case Kind::FiniteMarkov:
      return state_values.front().dim;
    default:
      return 1;
  }
}

MarginalLaw ProcessSpec::marginal(int nodes) const {
  switch (kind) {
    case Kind::IidDiscrete:
      return MarginalLaw::discrete(atoms, probs);
    case Kind::IidUniform01:
      return MarginalLaw::pushforward01([](double u) { return Pt(u); }, nodes);
    case Kind::FiniteMarkov:
      return MarginalLaw::discrete(state_values, stationary);
    case Kind::DoublingMap: {
      const std::string name = map_name;
      return MarginalLaw::pushforward01(
          [name](double u) { return Pt(map_observable(name, u)); }, nodes);
    }
  }
  throw std::logic_error("unreachable");
}

ProcessSpec ProcessSpec::iid_discrete(std::vector<Pt> atoms,
                                      std::vector<double> probs) {
  if (atoms.empty() || atoms.size() != probs.size())
    throw std::invalid_argument("iid_discrete: bad atoms/probs");
  double s = 0;
  for (double p : probs) {
    if (p < 0) throw std::invalid_argument("iid_discrete: negative prob");
    s += p;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw std::invalid_argument("iid_discrete: probs must sum to 1");
  ProcessSpec sp;
  sp.kind = Kind::IidDiscrete;
  sp.atoms = std::move(atoms);
  sp.probs = std::move(probs);
  sp.mixing = {MixingMeta::Family::Iid, 0.0};
  return sp;
}

ProcessSpec ProcessSpec::uniform01() {
  ProcessSpec sp;
  sp.kind = Kind::IidUniform01;
  sp.mixing = {MixingMeta::Family::Iid, 0.0};
  return sp;
}

ProcessSpec ProcessSpec::finite_markov(std::vector<std::vector<double>> transition,
                                       std::vector<Pt> state_values) {
  const std::size_t S = transition.size();
  if (S == 0 || state_values.size() != S)
    throw std::invalid_argument("finite_markov: bad sizes");
  for (const auto& row : transition) {
    if (row.size() != S) throw std::invalid_argument("finite_markov: ragged matrix");
    double s = 0;
    for (double p : row) {
      if (p < 0) throw std::invalid_argument("finite_markov: negative entry");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw std::invalid_argument("finite_markov: row sums must be 1 within 1e-12");
  }
  ProcessSpec sp;
  sp.kind = Kind::FiniteMarkov;
  sp.transition = std::move(transition);
  sp.state_values = std::move(state_values);

  // Stationary vector by averaged power iteration (the lazy-chain average
  // also converges for periodic matrices; P = I keeps the uniform start).
  std::vector<double> pi(S, 1.0 / static_cast<double>(S)), next(S);
  double residual = 1.0;
  for (int it = 0; it < 100000 && residual > 1e-13; ++it) {
    for (std::size_t j = 0; j < S; ++j) {
      double a = 0;
      for (std::size_t i = 0; i < S; ++i) a += pi[i] * sp.transition[i][j];
      next[j] = 0.5 * (pi[j] + a);
    }
    residual = 0;
    for (std::size_t j = 0; j < S; ++j) residual += std::abs(next[j] - pi[j]);
    pi = next;
  }
  // residual of pi P = pi
  double res = 0;
  for (std::size_t j = 0; j < S; ++j) {
    double a = 0;
    for (std::size_t i = 0; i < S; ++i) a += pi[i] * sp.transition[i][j];
    res += std::abs(a - pi[j]);
  }
  if (res > 1e-12)
    throw std::invalid_argument("finite_markov: stationary vector residual > 1e-12");
  sp.stationary = std::move(pi);
  sp.mixing = {MixingMeta::Family::Exponential, 1.0};
  return sp;
}

ProcessSpec ProcessSpec::doubling(std::string map_name, int bits) {
  if (bits < 1 || bits > 62)
    throw std::invalid_argument("doubling: bits in [1,62]");
  map_observable(map_name, 0.0);  // validate the name
  ProcessSpec sp;
  sp.kind = Kind::DoublingMap;
  sp.map_name = std::move(map_name);
  sp.bits = bits;
  sp.mixing = {MixingMeta::Family::Exponential, std::log(2.0)};
  return sp;
}

ProcessSpec ProcessSpec::registry(std::string_view name) {
  if (name == "rademacher")
    return iid_discrete({Pt(-1.0), Pt(1.0)}, {0.5, 0.5});
  if (name == "uniform01") return uniform01();
  if (name == "doubling_cos") return doubling("cos");
  if (name == "doubling_coboundary") return doubling("coboundary_cos");
  throw std::invalid_argument("unknown process: " + std::string(name));
}

double second_eigenvalue_modulus(const std::vector<std::vector<double>>& P,
                                 const std::vector<double>& stationary) {
  const std::size_t S = P.size();
  if (S < 2) return 0.0;
  // Track the worst geometric decay over deflated basis starts.
  double rho = 0.0;
  const int burn = 32, window = 32;
  for (std::size_t s0 = 0; s0 < S; ++s0) {
    std::vector<double> v(S, 0.0);
    for (std::size_t j = 0; j < S; ++j) v[j] = -stationary[j];
    v[s0] += 1.0;
    auto step = [&](std::vector<double>& x) {
      std::vector<double> y(S, 0.0);
      for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) y[j] += x[i] * P[i][j];
      x = std::move(y);
    };
    auto norm1 = [&](const std::vector<double>& x) {
      double n = 0;
      for (double t : x) n += std::abs(t);
      return n;
    };
    for (int it = 0; it < burn; ++it) step(v);
    const double n0 = norm1(v);
    if (n0 < 1e-300) continue;
    for (int it = 0; it < window; ++it) step(v);
    const double n1 = norm1(v);
    if (n1 < 1e-300) continue;
    rho = std::max(rho, std::pow(n1 / n0, 1.0 / window));
  }
  return std::min(rho, 1.0);
}

}  // namespace nclt
