#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace nclt {

// A point of R^wp. Inline storage; wp is small (one observation of the
// process).
struct Pt {
  static constexpr int kMaxDim = 4;
  std::array<double, kMaxDim> v{};
  int dim = 1;

  Pt() = default;
  explicit Pt(double x) { v[0] = x; }
  Pt(double x, double y) : dim(2) {
    v[0] = x;
    v[1] = y;
  }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
};

// Seed coordinates identifying one replica's random stream.
struct SeedCoords {
  std::uint64_t base_seed = 0;
  std::uint64_t replica = 0;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Outcome of a validation pass. Collects every violated condition instead of
// aborting on the first.
struct ValidationResult {
  bool ok = true;
  std::vector<std::string> violations;

  explicit operator bool() const { return ok; }
  void fail(std::string msg) {
    ok = false;
    violations.push_back(std::move(msg));
  }
  std::string joined() const {
    std::string s;
    for (const auto& m : violations) {
      if (!s.empty()) s += "; ";
      s += m;
    }
    return s;
  }
};

}  // namespace nclt
