#include "nclt/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nclt {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad number for " + what + ": '" + s + "'");
  }
}

long long to_ll(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for " + what + ": '" + s + "'");
  }
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section at line " +
                                    std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      c.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: empty key at line " + std::to_string(lineno));
    c.data_[section][key] = val;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = data_.find(section);
  return s != data_.end() && s->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  auto s = data_.find(section);
  if (s == data_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string Config::require(const std::string& section,
                            const std::string& key) const {
  if (!has(section, key))
    throw std::invalid_argument("config: missing [" + section + "] " + key);
  return get(section, key, "");
}

void Config::set(const std::string& dotted, const std::string& value) {
  const auto dot = dotted.find('.');
  if (dot == std::string::npos)
    throw std::invalid_argument("override key must be section.key: " + dotted);
  data_[dotted.substr(0, dot)][dotted.substr(dot + 1)] = value;
}

std::string Config::canonical() const {
  std::ostringstream out;
  for (const auto& [sec, kv] : data_) {
    out << "[" << sec << "]\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  }
  return out.str();
}

std::uint64_t config_hash(const Config& cfg) {
  const std::string s = cfg.canonical();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

ProcessSpec resolve_process(const Config& cfg) {
  const std::string kind = cfg.require("process", "kind");
  if (kind == "rademacher" || kind == "uniform01" || kind == "doubling_cos" ||
      kind == "doubling_coboundary")
    return ProcessSpec::registry(kind);
  if (kind == "iid_discrete") {
    // atoms = v:p v:p ...
    std::vector<Pt> atoms;
    std::vector<double> probs;
    for (const auto& tok : split_ws(cfg.require("process", "atoms"))) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::invalid_argument("config: atoms want value:prob tokens");
      atoms.push_back(Pt(to_double(tok.substr(0, colon), "atom value")));
      probs.push_back(to_double(tok.substr(colon + 1), "atom prob"));
    }
    return ProcessSpec::iid_discrete(std::move(atoms), std::move(probs));
  }
  if (kind == "finite_markov") {
    // transition = p11 p12 | p21 p22 ; states = x1 x2
    std::vector<std::vector<double>> P;
    {
      std::istringstream rows(cfg.require("process", "transition"));
      std::string row;
      while (std::getline(rows, row, '|')) {
        std::vector<double> r;
        for (const auto& tok : split_ws(row)) r.push_back(to_double(tok, "transition"));
        if (!r.empty()) P.push_back(std::move(r));
      }
    }
    std::vector<Pt> vals;
    for (const auto& tok : split_ws(cfg.require("process", "states")))
      vals.push_back(Pt(to_double(tok, "state value")));
    return ProcessSpec::finite_markov(std::move(P), std::move(vals));
  }
  if (kind == "doubling_map") {
    const int bits = static_cast<int>(to_ll(cfg.get("process", "bits", "53"), "bits"));
    return ProcessSpec::doubling(cfg.get("process", "map", "cos"), bits);
  }
  throw std::invalid_argument("config: unknown process kind '" + kind + "'");
}

}  // namespace

Experiment resolve_experiment(const Config& cfg) {
  Experiment e;
  e.process = resolve_process(cfg);

  const int ell = static_cast<int>(to_ll(cfg.get("observable", "ell", "2"), "ell"));
  e.obs = Observable::registry(cfg.require("observable", "name"), ell);

  e.qp.ell = ell;
  e.qp.k = static_cast<int>(to_ll(cfg.get("q", "k", std::to_string(ell)), "k"));
  e.qp.gamma = to_double(cfg.get("q", "gamma", "0.5"), "gamma");
  for (int j = e.qp.k + 1; j <= ell; ++j) {
    const std::string key = "poly_" + std::to_string(j);
    std::vector<long long> coeffs;
    for (const auto& tok : split_ws(cfg.require("q", key)))
      coeffs.push_back(to_ll(tok, key));
    e.qp.poly.push_back(std::move(coeffs));
  }

  e.params.ell = ell;
  e.params.k = e.qp.k;
  e.params.wp = e.process.wp();
  e.params.p = to_double(cfg.get("params", "p", "20"), "p");
  e.params.q = to_double(cfg.get("params", "q", "20"), "q");
  e.params.b = to_double(cfg.get("params", "b", "4"), "b");
  e.params.alpha = to_double(cfg.get("params", "alpha", "2"), "alpha");
  e.params.lambda = to_double(cfg.get("params", "lambda", "2"), "lambda");
  e.params.delta = to_double(cfg.get("params", "delta", "0.1"), "delta");
  e.params.moment_m = to_double(cfg.get("params", "m", "40"), "m");
  e.params.iota = to_double(cfg.get("params", "iota", "1"), "iota");
  e.params.kappa = to_double(cfg.get("params", "kappa", "1"), "kappa");
  e.params.K = to_double(cfg.get("params", "K", "1"), "K");
  if (const auto pr = validate_params(e.params); !pr.ok)
    throw std::invalid_argument("config: params invalid: " + pr.joined());

  for (const auto& tok : split_ws(cfg.require("run", "n_grid")))
    e.n_grid.push_back(to_ll(tok, "n_grid"));
  if (e.n_grid.empty()) throw std::invalid_argument("config: empty n_grid");
  for (std::size_t i = 1; i < e.n_grid.size(); ++i)
    if (e.n_grid[i] <= e.n_grid[i - 1])
      throw std::invalid_argument("config: n_grid must be strictly ascending");

  e.replicas = to_ll(cfg.get("run", "replicas", "2"), "replicas");
  if (e.replicas < 2) throw std::invalid_argument("config: replicas >= 2 required");

  std::string seed_str = cfg.get("run", "seed", "");
  if (seed_str.empty()) {
    if (const char* env = std::getenv("NCLT_SEED")) seed_str = env;
  }
  e.base_seed = seed_str.empty()
                    ? 0
                    : static_cast<std::uint64_t>(std::stoull(seed_str));

  e.workers = static_cast<int>(to_ll(cfg.get("run", "workers", "1"), "workers"));
  if (e.workers < 1) throw std::invalid_argument("config: workers >= 1");
  e.series_L = static_cast<int>(to_ll(cfg.get("run", "L", "40"), "L"));
  e.N = to_ll(cfg.get("run", "N", std::to_string(e.n_grid.back())), "N");
  e.tol = to_double(cfg.get("run", "tol", "1e-8"), "tol");
  e.t = to_double(cfg.get("run", "t", "1"), "t");

  if (const auto qr = validate_q_profile(e.qp, std::min<long long>(e.n_grid.back(), 100000));
      !qr.ok)
    throw std::invalid_argument("config: q-profile invalid: " + qr.joined());
  return e;
}

}  // namespace nclt
