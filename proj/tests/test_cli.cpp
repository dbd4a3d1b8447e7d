#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kRateConfig = R"(
[process]
kind = rademacher
[observable]
name = product
ell = 2
[run]
n_grid = 64 128 256 512
replicas = 400
seed = 42
workers = 1
)";

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("nclt_test_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NCLT_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "exp.ini";
  std::ofstream f(p);
  f << body;
  return p;
}

std::string first_line(const std::string& s) {
  return s.substr(0, s.find('\n'));
}

}  // namespace

TEST_CASE("rate subcommand writes the schema and a manifest") {
  const auto dir = fresh_dir("rate");
  const auto cfg = write_config(dir, kRateConfig);
  const int rc = run_cli("rate --config " + cfg.string() + " --out " + dir.string());
  CHECK(rc == 0);
  const auto csv = slurp(dir / "rate.csv");
  CHECK(first_line(csv) == "N,dK,replicas,seed");
  CHECK(slurp(dir / "run_manifest.json").find("\"exponent\"") != std::string::npos);
}

TEST_CASE("variance subcommand schema") {
  const auto dir = fresh_dir("variance");
  const auto cfg = write_config(dir, kRateConfig);
  CHECK(run_cli("variance --config " + cfg.string() + " --out " + dir.string()) == 0);
  CHECK(first_line(slurp(dir / "variance.csv")) == "N,var_hat,stderr,replicas,seed");
}

TEST_CASE("positivity subcommand schema and verdict") {
  const auto dir = fresh_dir("positivity");
  const auto cfg = write_config(dir, kRateConfig);
  CHECK(run_cli("positivity --config " + cfg.string() + " --out " + dir.string()) == 0);
  CHECK(first_line(slurp(dir / "sigma_curve.csv")) ==
        "N,var_sigma_hat,stderr,replicas,seed");
  CHECK(slurp(dir / "run_manifest.json").find("\"verdict\"") != std::string::npos);
}

TEST_CASE("exact-sigma subcommand: terms plus tail reproduce sigma^2") {
  const auto dir = fresh_dir("sigma");
  const auto cfg = write_config(dir, std::string(kRateConfig) +
                                         "\n[run2]\nunused = 1\n");
  CHECK(run_cli("exact-sigma --config " + cfg.string() + " --out " + dir.string() +
                " --override run.L=25 --override run.replicas=5000") == 0);
  const auto csv = slurp(dir / "sigma_series.csv");
  CHECK(first_line(csv) == "l,rho_min,rho_max,weight,R_l,R_l_stderr,term");
  // sum the term column
  double sum = 0;
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  int rows = 0;
  while (std::getline(is, line)) {
    const auto last = line.rfind(',');
    sum += std::stod(line.substr(last + 1));
    ++rows;
  }
  CHECK(rows == 25);
  CHECK(std::abs(sum - 1.0) <= 0.05);
}

TEST_CASE("martingale-check subcommand schema") {
  const auto dir = fresh_dir("mart");
  const auto cfg = write_config(dir, kRateConfig);
  CHECK(run_cli("martingale-check --config " + cfg.string() + " --out " +
                dir.string() + " --override run.N=256") == 0);
  const auto csv = slurp(dir / "qv.csv");
  CHECK(first_line(csv) == "i,j,N,qv_hat,target");
  CHECK(slurp(dir / "run_manifest.json").find("\"residual_pass\": true") !=
        std::string::npos);
}

TEST_CASE("simulate subcommand") {
  const auto dir = fresh_dir("simulate");
  const auto cfg = write_config(dir, kRateConfig);
  CHECK(run_cli("simulate --config " + cfg.string() + " --out " + dir.string() +
                " --override run.n_grid=64") == 0);
  CHECK(first_line(slurp(dir / "samples.csv")) == "replica,N,t,value,seed");
}

TEST_CASE("invalid configs exit 2 and name the violation") {
  const auto dir = fresh_dir("bad");
  const auto cfg = write_config(dir, std::string(kRateConfig));
  CHECK(run_cli("variance --config " + cfg.string() + " --out " + dir.string() +
                " --override run.replicas=1") == 2);
  CHECK(run_cli("variance --config " + cfg.string() + " --out " + dir.string() +
                " --override observable.name=unknown_thing") == 2);
  CHECK(run_cli("variance --config " + dir.string() + "/missing.ini") == 2);
}

TEST_CASE("CSV bodies are byte-identical across reruns and worker counts") {
  const auto d1 = fresh_dir("det1");
  const auto d2 = fresh_dir("det2");
  const auto d3 = fresh_dir("det3");
  const auto cfg = write_config(d1, kRateConfig);
  REQUIRE(run_cli("variance --config " + cfg.string() + " --out " + d1.string() +
                  " --workers 1") == 0);
  REQUIRE(run_cli("variance --config " + cfg.string() + " --out " + d2.string() +
                  " --workers 8") == 0);
  REQUIRE(run_cli("variance --config " + cfg.string() + " --out " + d3.string() +
                  " --workers 1") == 0);
  CHECK(slurp(d1 / "variance.csv") == slurp(d2 / "variance.csv"));
  CHECK(slurp(d1 / "variance.csv") == slurp(d3 / "variance.csv"));
}

TEST_CASE("seed precedence: flag over config") {
  const auto d1 = fresh_dir("seed1");
  const auto d2 = fresh_dir("seed2");
  const auto cfg = write_config(d1, kRateConfig);
  REQUIRE(run_cli("variance --config " + cfg.string() + " --out " + d1.string()) == 0);
  REQUIRE(run_cli("variance --config " + cfg.string() + " --out " + d2.string() +
                  " --seed 4243") == 0);
  CHECK(slurp(d1 / "variance.csv") != slurp(d2 / "variance.csv"));
  CHECK(slurp(d2 / "variance.csv").find(",4243\n") != std::string::npos);
}

TEST_CASE("seed precedence: NCLT_SEED applies only when the config is silent") {
  const std::string no_seed = R"(
[process]
kind = rademacher
[observable]
name = product
ell = 2
[run]
n_grid = 32 64
replicas = 50
workers = 1
)";
  const auto d1 = fresh_dir("envseed");
  const auto cfg = write_config(d1, no_seed);
  const std::string cmd = "NCLT_SEED=911 " + std::string(NCLT_BIN) +
                          " variance --config " + cfg.string() + " --out " +
                          d1.string() + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(slurp(d1 / "variance.csv").find(",911\n") != std::string::npos);

  // config seed wins over the environment
  const auto d2 = fresh_dir("envseed2");
  const auto cfg2 = write_config(d2, kRateConfig);
  const std::string cmd2 = "NCLT_SEED=911 " + std::string(NCLT_BIN) +
                           " variance --config " + cfg2.string() + " --out " +
                           d2.string() + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd2.c_str())) == 0);
  CHECK(slurp(d2 / "variance.csv").find(",42\n") != std::string::npos);
}
