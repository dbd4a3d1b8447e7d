#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "nclt/model.hpp"
#include "nclt/types.hpp"

namespace nclt {

// Declared dependence-decay metadata of a generator. Never estimated from
// data; built-in kinds ship with their known rates.
struct MixingMeta {
  enum class Family { Iid, Exponential, Polynomial } family = Family::Iid;
  double rate = 0.0;  // exponential rate or polynomial exponent
};

// Smooth 1-periodic functions for the dyadic-map generator.
double map_observable(std::string_view name, double x);

struct ProcessSpec {
  enum class Kind { IidDiscrete, IidUniform01, FiniteMarkov, DoublingMap };
  Kind kind = Kind::IidUniform01;

  // IidDiscrete
  std::vector<Pt> atoms;
  std::vector<double> probs;

  // FiniteMarkov (row-stochastic transition, start from stationary)
  std::vector<std::vector<double>> transition;
  std::vector<Pt> state_values;
  std::vector<double> stationary;  // computed on construction

  // DoublingMap
  std::string map_name = "cos";
  int bits = 53;

  MixingMeta mixing;

  int wp() const;
  bool iid() const {
    return kind == Kind::IidDiscrete || kind == Kind::IidUniform01;
  }
  int n_states() const { return static_cast<int>(transition.size()); }

  // Integration handle matching this spec's one-dimensional marginal.
  MarginalLaw marginal(int nodes = 64) const;

  // Registry: "rademacher", "uniform01", "doubling_cos", "doubling_coboundary".
  static ProcessSpec registry(std::string_view name);
  static ProcessSpec iid_discrete(std::vector<Pt> atoms, std::vector<double> probs);
  static ProcessSpec uniform01();
  // Throws unless rows sum to 1 within 1e-12; computes the stationary vector
  // to residual 1e-12.
  static ProcessSpec finite_markov(std::vector<std::vector<double>> transition,
                                   std::vector<Pt> state_values);
  static ProcessSpec doubling(std::string map_name, int bits = 53);
};

// Second-largest eigenvalue modulus estimate for a row-stochastic matrix
// (power decay on the complement of the stationary direction).
double second_eigenvalue_modulus(const std::vector<std::vector<double>>& P,
                                 const std::vector<double>& stationary);

}  // namespace nclt
