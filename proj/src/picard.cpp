#include "bsdebranch/picard.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bsdebranch/errors.hpp"

namespace bsde {

std::vector<double> TimeGrid::points() const {
  std::vector<double> p;
  for (int i = 0; i <= steps; ++i) p.push_back(at(i));
  return p;
}

namespace {

// spatial grid: the report box padded by whole steps so report nodes stay on
// the grid
GridFunction make_space_grid(const Problem& prob, const SolverConfig& cfg) {
  const int d = prob.coef.dim;
  const double pad =
      cfg.box_margin_sigmas * prob.coef.sigma_sup * std::sqrt(prob.horizon);
  const int extra = int(std::ceil(pad / cfg.dx - 1e-9));
  Vec lo(d), hi(d);
  int nodes[kMaxDim] = {1, 1, 1};
  for (int a = 0; a < d; ++a) {
    const double span = prob.report_hi[a] - prob.report_lo[a];
    const int inner = int(std::lround(span / cfg.dx));
    if (std::abs(inner * cfg.dx - span) > 1e-9 * std::max(1.0, span))
      throw ConfigError("dx does not divide the report box");
    lo[a] = prob.report_lo[a] - extra * cfg.dx;
    hi[a] = prob.report_hi[a] + extra * cfg.dx;
    nodes[a] = inner + 2 * extra + 1;
  }
  return GridFunction::make(d, lo, hi, nodes);
}

// v = sigma^T Du on nodes, from per-axis gradient grids
std::vector<GridFunction> z_scale(const std::vector<GridFunction>& grad,
                                  const SdeCoefficients& coef) {
  const int d = coef.dim;
  std::vector<GridFunction> v(std::size_t(d), grad[0]);
  for (std::size_t f = 0; f < grad[0].values.size(); ++f) {
    const Vec x = grad[0].node(f);
    Vec du(d);
    for (int a = 0; a < d; ++a) du[a] = grad[std::size_t(a)].values[f];
    const Vec zv = matTvec(coef.sigma(x), du);
    for (int a = 0; a < d; ++a) v[std::size_t(a)].values[f] = zv[a];
  }
  return v;
}

void check_terminal(const GridFunction& g_grid, double M) {
  for (double v : g_grid.values)
    if (std::abs(v) > M * (1.0 + 1e-12))
      throw ConfigError("terminal data exceeds the truncation level M; face-lift it first");
  const GridFunction lifted = facelift(g_grid, M);
  if (sup_distance(lifted, g_grid) > 1e-9)
    throw ConfigError("terminal data is not M-Lipschitz on the grid; face-lift it first");
}

}  // namespace

void initial_prior(const GridFunction& g_grid, const SdeCoefficients& coef,
                   double M, int n_times,
                   std::vector<GridFunction>& prior_u,
                   std::vector<std::vector<GridFunction>>& prior_v) {
  check_terminal(g_grid, M);
  const std::vector<GridFunction> v0 = z_scale(fd_gradient(g_grid), coef);
  prior_u.assign(std::size_t(n_times), g_grid);
  prior_v.assign(std::size_t(n_times), v0);
}

PicardState run(const Problem& prob, const SolverConfig& cfg) {
  PicardState st;
  st.grid = TimeGrid{prob.horizon, cfg.n_h};
  st.times = st.grid.points();
  const double h = st.grid.h();

  // explosion-time gate
  BoundConstants bc;
  bc.M = cfg.M;
  bc.T = prob.horizon;
  bc.c_mu_sigma = compute_c_mu_sigma(prob.coef);
  const LocalPolynomialDriver& drv = prob.drv;
  bc.f_sup = [&drv](double m_cap) { return sup_f_circ(drv, m_cap); };
  st.h_circ = compute_h_circ(bc);
  if (cfg.enforce_bounds && h >= st.h_circ.h_circ)
    throw ConfigError("time step h = " + std::to_string(h) +
                      " is not below the explosion bound h_circ = " +
                      std::to_string(st.h_circ.h_circ));
  if (cfg.enforce_bounds &&
      cfg.lifetime.kind == LifetimeDensity::Kind::truncated_power) {
    GridFunction probe = make_space_grid(prob, cfg);
    const double lo = probe.lo[0];
    const double hi = probe.lo[0] + probe.dx[0] * (probe.nn[0] - 1);
    const CHats ch = compute_C_hats(bc, prob.coef, prob.drv, lo, hi, true);
    const HPrimeResult hp =
        compute_h_prime(ch.C1_hat, ch.C2_hat, int(prob.drv.index_set.size()));
    if (h >= hp.h_prime)
      throw ConfigError("time step h = " + std::to_string(h) +
                        " is not below the moment bound h_prime = " +
                        std::to_string(hp.h_prime));
  }

  GridFunction g_grid = make_space_grid(prob, cfg);
  g_grid.fill(prob.g);

  std::vector<GridFunction> prior_u;
  std::vector<std::vector<GridFunction>> prior_v;
  initial_prior(g_grid, prob.coef, cfg.M, cfg.n_h + 1, prior_u, prior_v);

  st.u.assign(std::size_t(cfg.n_h + 1), g_grid);
  st.v = prior_v;

  BranchingConfig bcfg;
  bcfg.lifetime = cfg.lifetime;
  bcfg.offspring_probs = prob.drv.offspring_probs();
  bcfg.max_particles = cfg.max_particles;
  bcfg.dt = cfg.dt;
  bcfg.g_control_variate = cfg.g_control_variate;
  bcfg.a_control_variate = cfg.a_control_variate;
  bcfg.sample_gradient = cfg.gradient == GradientMode::malliavin;

  for (int m = 1; m <= cfg.m_max; ++m) {
    std::vector<GridFunction> u_new(std::size_t(cfg.n_h + 1), g_grid);
    std::vector<std::vector<GridFunction>> v_new = prior_v;  // layout only
    PriorMaps prior{&st.times, &prior_u, &prior_v};

    for (int i = cfg.n_h - 1; i >= 0; --i) {
      const double t0 = st.times[std::size_t(i)];
      const double t1 = st.times[std::size_t(i + 1)];
      const GridFunction& terminal = u_new[std::size_t(i + 1)];
      GridFunction& cur = u_new[std::size_t(i)];
      const std::size_t n_nodes = cur.values.size();
      std::vector<Vec> v_raw(n_nodes, Vec(prob.coef.dim));
      std::vector<NodeDiag> diag(n_nodes);

      auto work = [&](std::size_t node) {
        const Vec x = cur.node(node);
        const EstimateStats est = estimate_u_v(
            bcfg, prob.coef, prob.drv, t0, x, t1, terminal, prior,
            cfg.variance_target, cfg.sample_cap, cfg.pilot, cfg.seed,
            std::uint64_t(m), std::uint64_t(i), std::uint64_t(node));
        cur.values[node] = est.u_mean;
        v_raw[node] = est.v_mean;
        diag[node] = {i, node, est.n_used, est.u_std, est.u_mean,
                      est.v_std.n > 0 ? est.v_std[0] : 0.0};
      };

      if (cfg.threads > 0) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.threads)
        for (long node = 0; node < long(n_nodes); ++node)
          work(std::size_t(node));
#else
        for (std::size_t node = 0; node < n_nodes; ++node) work(node);
#endif
      } else {
        // serial reference path, kept verbatim for testing the parallel one
        for (std::size_t node = 0; node < n_nodes; ++node) work(node);
      }

      if (cfg.facelift_on) cur = facelift(cur, cfg.M);

      if (cfg.gradient == GradientMode::malliavin) {
        std::vector<GridFunction>& vg = v_new[std::size_t(i)];
        for (std::size_t f = 0; f < n_nodes; ++f) {
          const Vec x = cur.node(f);
          const Vec zv = matTvec(prob.coef.sigma(x), v_raw[f]);
          for (int a = 0; a < prob.coef.dim; ++a)
            vg[std::size_t(a)].values[f] = zv[a];
        }
      } else {
        v_new[std::size_t(i)] = z_scale(fd_gradient(cur), prob.coef);
      }
      st.diag.insert(st.diag.end(), diag.begin(), diag.end());
    }
    v_new[std::size_t(cfg.n_h)] = prior_v[std::size_t(cfg.n_h)];

    double delta = 0;
    for (int i = 0; i <= cfg.n_h; ++i)
      delta = std::max(delta, sup_distance(u_new[std::size_t(i)],
                                           m == 1 ? prior_u[std::size_t(i)]
                                                  : st.u[std::size_t(i)]));
    st.deltas.push_back(delta);
    st.u = u_new;
    st.v = v_new;
    st.iterations = m;
    prior_u = st.u;
    prior_v = st.v;
    if (cfg.delta_tol > 0 && delta < cfg.delta_tol) break;
  }
  return st;
}

ErrorReport error_report(const PicardState& state, const Problem& prob) {
  if (!prob.analytic) throw ConfigError("error_report: no analytic solution");
  ErrorReport rep;
  const GridFunction& u0 = state.u[0];
  double sum = 0;
  for (std::size_t f = 0; f < u0.values.size(); ++f) {
    const Vec x = u0.node(f);
    bool in_box = true;
    for (int a = 0; a < u0.dim; ++a)
      if (x[a] < prob.report_lo[a] - 1e-9 || x[a] > prob.report_hi[a] + 1e-9)
        in_box = false;
    if (!in_box) continue;
    const double exact = prob.analytic(0.0, x);
    const double err = std::abs(u0.values[f] - exact);
    rep.nodes.push_back(f);
    rep.exact.push_back(exact);
    rep.abs_err.push_back(err);
    rep.max_err = std::max(rep.max_err, err);
    sum += err;
  }
  rep.mean_err = rep.abs_err.empty() ? 0 : sum / double(rep.abs_err.size());
  return rep;
}

}  // namespace bsde
