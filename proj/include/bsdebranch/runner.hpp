#pragma once

#include <string>
#include <vector>

#include "bsdebranch/picard.hpp"

namespace bsde {

struct RunConfig {
  std::string problem = "paper-example";
  int n_y = 20, n_z = 10;  // spline meshes (where the problem uses a fit)
  SolverConfig solver;

  // optional sweep section
  std::string sweep_axis;                       // "nh" | "dx" | "mesh"
  std::vector<double> sweep_values;             // nh or dx values
  std::vector<std::pair<int, int>> sweep_mesh;  // (n_y, n_z) values
};

RunConfig load_run_config(const std::string& path);
std::string run_config_json(const RunConfig& cfg);  // canonical manifest text

struct SolveSummary {
  double max_err = -1;  // -1 when no analytic solution
  double mean_err = -1;
  double wall_seconds = 0;
};

// fit -> bounds gate -> run -> error report; writes solution.csv,
// diagnostics.csv and manifest.json under out_dir.
SolveSummary run_solve(const RunConfig& cfg, const std::string& out_dir);

// one run per sweep value; consolidated sweep.csv; failures recorded inline
void run_sweep(const RunConfig& cfg, const std::string& out_dir);

// key: value report of the bounds module for this configuration
std::string run_bounds(const RunConfig& cfg);

// plain nested Monte-Carlo estimate of E[g(X_T)] per report node
void run_mc_oracle(const RunConfig& cfg, long n_paths,
                   const std::string& out_path,
                   std::vector<double>* means = nullptr,
                   std::vector<double>* std_errs = nullptr);

}  // namespace bsde
