#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsdebranch/bounds.hpp"
#include "bsdebranch/branching.hpp"
#include "bsdebranch/driver.hpp"
#include "bsdebranch/grid.hpp"
#include "bsdebranch/sde.hpp"

namespace bsde {

struct TimeGrid {
  double horizon = 1.0;
  int steps = 20;
  double h() const { return horizon / double(steps); }
  double at(int i) const { return horizon * double(i) / double(steps); }
  std::vector<double> points() const;
};

enum class GradientMode { finite_difference, malliavin };

struct SolverConfig {
  int n_h = 20;
  double dx = 0.1;
  double dt = 0.002;
  int m_max = 1;
  double M = 1.0;
  double variance_target = 0.000125;
  long sample_cap = 500000;
  long pilot = 1000;
  GradientMode gradient = GradientMode::finite_difference;
  bool facelift_on = true;
  bool enforce_bounds = true;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: serial reference path
  double delta_tol = 0;  // 0: fixed m_max
  LifetimeDensity lifetime;
  long max_particles = 1000000;
  bool g_control_variate = true;
  bool a_control_variate = true;
  double box_margin_sigmas = 4.0;  // simulation box = report box +- k sigma sqrt(T)
};

// One solvable problem: diffusion, driver, terminal data, optional truth.
struct Problem {
  std::string name;
  SdeCoefficients coef;
  LocalPolynomialDriver drv;
  std::function<double(const Vec&)> g;
  std::function<double(double, const Vec&)> analytic;  // may be empty
  double horizon = 1.0;
  Vec report_lo, report_hi;  // box on which results are reported
};

// Per-node sampling diagnostics of one time interval.
struct NodeDiag {
  int interval;
  std::size_t node;
  long n_used;
  double theta;
  double estimate;
  double v_theta;  // first-component sample std of the gradient estimator
};

struct PicardState {
  TimeGrid grid;
  std::vector<double> times;
  std::vector<GridFunction> u;               // per t_i
  std::vector<std::vector<GridFunction>> v;  // per t_i, per component (Z-scaled)
  std::vector<double> deltas;                // sup-norm change per iteration
  int iterations = 0;
  std::vector<NodeDiag> diag;
  HCircResult h_circ{0, 0};
};

// (prior_u, prior_v) = (g, Dg sigma) at every grid time; g must be bounded
// by M and M-Lipschitz on the nodes.
void initial_prior(const GridFunction& g_grid, const SdeCoefficients& coef,
                   double M, int n_times,
                   std::vector<GridFunction>& prior_u,
                   std::vector<std::vector<GridFunction>>& prior_v);

struct PicardContext;  // internal

// Full run: backward sweeps with face-lifting, m_max Picard iterations.
PicardState run(const Problem& prob, const SolverConfig& cfg);

struct ErrorReport {
  std::vector<double> abs_err;  // per report-box node at t = 0
  std::vector<double> exact;
  std::vector<std::size_t> nodes;  // flat indices into u[0]
  double max_err = 0;
  double mean_err = 0;
};

ErrorReport error_report(const PicardState& state, const Problem& prob);

}  // namespace bsde
