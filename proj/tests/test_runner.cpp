#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsdebranch/errors.hpp"
#include "bsdebranch/runner.hpp"

using namespace bsde;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kFastConfig = R"({
  "problem": "zero-driver",
  "n_h": 4, "dx": 0.1, "dt": 0.01,
  "sample_cap": 1500, "pilot": 300, "variance_target": 0.01,
  "seed": 3
})";

fs::path tmp_dir() {
  const fs::path d = fs::temp_directory_path() / "bsde_runner_test";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("config parsing") {
  const fs::path dir = tmp_dir();
  SUBCASE("fields land in the solver config") {
    spit(dir / "a.json", kFastConfig);
    const RunConfig cfg = load_run_config((dir / "a.json").string());
    CHECK(cfg.problem == "zero-driver");
    CHECK(cfg.solver.n_h == 4);
    CHECK(cfg.solver.dx == 0.1);
    CHECK(cfg.solver.sample_cap == 1500);
    CHECK(cfg.solver.seed == 3);
    CHECK(cfg.solver.facelift_on);
    CHECK(cfg.solver.gradient == GradientMode::finite_difference);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_run_config((dir / "nope.json").string()), ConfigError);
  }
  SUBCASE("malformed json") {
    spit(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(load_run_config((dir / "bad.json").string()), ConfigError);
  }
  SUBCASE("unknown problem") {
    spit(dir / "p.json", R"({"problem": "mystery"})");
    CHECK_THROWS_AS(load_run_config((dir / "p.json").string()), ConfigError);
  }
  SUBCASE("bad gradient mode") {
    spit(dir / "g.json", R"({"problem": "zero-driver", "gradient": "magic"})");
    CHECK_THROWS_AS(load_run_config((dir / "g.json").string()), ConfigError);
  }
  SUBCASE("out-of-range values") {
    spit(dir / "r.json", R"({"problem": "zero-driver", "dx": -1.0})");
    CHECK_THROWS_AS(load_run_config((dir / "r.json").string()), ConfigError);
    spit(dir / "r2.json", R"({"problem": "zero-driver", "n_h": 0})");
    CHECK_THROWS_AS(load_run_config((dir / "r2.json").string()), ConfigError);
  }
  SUBCASE("lifetime section") {
    spit(dir / "l.json",
         R"({"problem": "zero-driver", "lifetime": {"kind": "truncated-power"}})");
    const RunConfig cfg = load_run_config((dir / "l.json").string());
    CHECK(cfg.solver.lifetime.kind == LifetimeDensity::Kind::truncated_power);
  }
}

TEST_CASE("manifest round-trips through the parser") {
  const fs::path dir = tmp_dir();
  spit(dir / "m.json", kFastConfig);
  RunConfig cfg = load_run_config((dir / "m.json").string());
  cfg.solver.gradient = GradientMode::malliavin;
  const std::string manifest = run_config_json(cfg);
  spit(dir / "m2.json", manifest);
  const RunConfig again = load_run_config((dir / "m2.json").string());
  CHECK(run_config_json(again) == manifest);
  CHECK(again.solver.gradient == GradientMode::malliavin);
}

TEST_CASE("solve artifacts are deterministic and reproducible from the manifest") {
  const fs::path dir = tmp_dir();
  spit(dir / "cfg.json", kFastConfig);
  const RunConfig cfg = load_run_config((dir / "cfg.json").string());

  run_solve(cfg, (dir / "run_a").string());
  // reproduce from the emitted manifest, with a different thread count
  RunConfig cfg2 = load_run_config((dir / "run_a" / "manifest.json").string());
  cfg2.solver.threads = 2;
  run_solve(cfg2, (dir / "run_b").string());

  CHECK(slurp(dir / "run_a" / "solution.csv") ==
        slurp(dir / "run_b" / "solution.csv"));
  CHECK(slurp(dir / "run_a" / "diagnostics.csv") ==
        slurp(dir / "run_b" / "diagnostics.csv"));

  const std::string sol = slurp(dir / "run_a" / "solution.csv");
  CHECK(sol.rfind("x,u_est", 0) == 0);
  const std::string diag = slurp(dir / "run_a" / "diagnostics.csv");
  CHECK(diag.rfind("interval,node,n_used,theta,estimate", 0) == 0);
}

TEST_CASE("sweep continues past failing runs") {
  const fs::path dir = tmp_dir();
  spit(dir / "sweep.json", R"({
    "problem": "zero-driver",
    "n_h": 4, "dx": 0.1, "dt": 0.01,
    "sample_cap": 1500, "pilot": 300, "variance_target": 0.01,
    "sweep": {"axis": "nh", "values": [1, 4]}
  })");
  const RunConfig cfg = load_run_config((dir / "sweep.json").string());
  run_sweep(cfg, (dir / "sweep_out").string());
  const std::string table = slurp(dir / "sweep_out" / "sweep.csv");
  // n_h = 1 violates h < h_circ = T and is recorded as a failure
  CHECK(table.find("failed") != std::string::npos);
  CHECK(table.find("nh,4") != std::string::npos);
  int lines = 0;
  for (char c : table)
    if (c == '\n') ++lines;
  CHECK(lines == 3);  // header + one row per sweep value
}

TEST_CASE("bounds report carries the gate quantities") {
  const fs::path dir = tmp_dir();
  spit(dir / "b.json", kFastConfig);
  const std::string rep = run_bounds(load_run_config((dir / "b.json").string()));
  for (const char* key : {"h_circ:", "m_h_circ:", "C1_hat:", "C2_hat:",
                          "h_prime:", "m_h_prime:", "h_ok: yes"})
    CHECK(rep.find(key) != std::string::npos);
}

TEST_CASE("mc oracle emits one row per report node") {
  const fs::path dir = tmp_dir();
  spit(dir / "o.json", kFastConfig);
  const RunConfig cfg = load_run_config((dir / "o.json").string());
  std::vector<double> means, ses;
  run_mc_oracle(cfg, 200, (dir / "oracle.csv").string(), &means, &ses);
  CHECK(means.size() == 21);  // [-1, 1] at dx = 0.1
  for (double m : means) {
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
  }
  const std::string csv = slurp(dir / "oracle.csv");
  CHECK(csv.rfind("x,mean,std_err,n", 0) == 0);
}
