#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nclt/model.hpp"
#include "nclt/process.hpp"
#include "nclt/types.hpp"

namespace nclt {

// INI-style configuration: [section] headers and key = value lines; '#' and
// ';' start comments.  Kept as raw strings so --override can patch any key
// before resolution.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  // dotted key "section.key"
  void set(const std::string& dotted, const std::string& value);

  // Sorted, normalized dump (stable across key order in the file).
  std::string canonical() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

// Resolved experiment: every registry name looked up, every invariant checked.
struct Experiment {
  ProcessSpec process;
  Observable obs;
  QProfile qp;
  AssumptionParams params;
  std::vector<long long> n_grid;
  long long replicas = 2;
  std::uint64_t base_seed = 0;
  int workers = 1;
  int series_L = 40;
  long long N = 0;  // single-N subcommands; defaults to the grid maximum
  double tol = 1e-8;
  double t = 1.0;
};

// Throws std::invalid_argument naming the violated invariant.
Experiment resolve_experiment(const Config& cfg);

// FNV-1a 64 over the canonical dump.
std::uint64_t config_hash(const Config& cfg);

// Numeric formatting shared by all CSV emitters (shortest round-trip via
// %.17g keeps re-runs byte-identical).
std::string csv_double(double v);

}  // namespace nclt
