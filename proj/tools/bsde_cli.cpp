#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "bsdebranch/driver.hpp"
#include "bsdebranch/errors.hpp"
#include "bsdebranch/problems.hpp"
#include "bsdebranch/runner.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out = "out";
  long seed = -1;
  int threads = -1;
  bool no_facelift = false;
  std::string gradient;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_config = true) {
  auto* c = cmd->add_option("--config", o.config, "run configuration (JSON)");
  if (need_config) c->required();
  cmd->add_option("--out", o.out, "output directory / file");
  cmd->add_option("--seed", o.seed, "override the configured seed");
  cmd->add_option("--threads", o.threads,
                  "override thread count (0 = serial reference)");
  cmd->add_flag("--no-facelift", o.no_facelift,
                "disable the per-step face-lift");
  cmd->add_option("--gradient", o.gradient, "fd or malliavin")
      ->check(CLI::IsMember({"fd", "malliavin"}));
}

bsde::RunConfig make_config(const CommonOpts& o) {
  bsde::RunConfig cfg = bsde::load_run_config(o.config);
  if (o.seed >= 0) cfg.solver.seed = std::uint64_t(o.seed);
  if (o.threads >= 0) cfg.solver.threads = o.threads;
  if (o.no_facelift) cfg.solver.facelift_on = false;
  if (o.gradient == "fd")
    cfg.solver.gradient = bsde::GradientMode::finite_difference;
  else if (o.gradient == "malliavin")
    cfg.solver.gradient = bsde::GradientMode::malliavin;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"branching-diffusion BSDE solver"};
  app.require_subcommand(1);

  CommonOpts so, wo, bo, mo;
  CLI::App* solve = app.add_subcommand("solve", "single backward solve");
  add_common(solve, so);
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep");
  add_common(sweep, wo);
  CLI::App* bounds =
      app.add_subcommand("bounds", "report the step-size bounds");
  add_common(bounds, bo);
  CLI::App* oracle = app.add_subcommand(
      "mc-oracle", "plain Monte-Carlo of E[g(X_T)] (test support)");
  add_common(oracle, mo);
  long oracle_paths = 100000;
  oracle->add_option("--paths", oracle_paths, "paths per node");

  std::string fit_out = "driver.json";
  int fit_ny = 20, fit_nz = 10;
  CLI::App* fit = app.add_subcommand("fit-driver",
                                     "fit and save the built-in example driver");
  fit->add_option("--out", fit_out, "output file");
  fit->add_option("--ny", fit_ny, "mesh cells in y");
  fit->add_option("--nz", fit_nz, "mesh cells in z");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (solve->parsed()) {
      const bsde::SolveSummary s = bsde::run_solve(make_config(so), so.out);
      std::printf("wall_seconds: %.3f\n", s.wall_seconds);
      if (s.max_err >= 0)
        std::printf("max_err: %.6g\nmean_err: %.6g\n", s.max_err, s.mean_err);
    } else if (sweep->parsed()) {
      const bsde::RunConfig cfg = make_config(wo);
      if (cfg.sweep_axis.empty())
        throw bsde::ConfigError("sweep: the config has no sweep section");
      bsde::run_sweep(cfg, wo.out);
    } else if (bounds->parsed()) {
      std::fputs(bsde::run_bounds(make_config(bo)).c_str(), stdout);
    } else if (oracle->parsed()) {
      bsde::run_mc_oracle(make_config(mo), oracle_paths, mo.out);
    } else if (fit->parsed()) {
      const bsde::Problem prob =
          bsde::make_problem("paper-example", fit_ny, fit_nz);
      bsde::save_driver(prob.drv, fit_out);
    }
  } catch (const bsde::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
