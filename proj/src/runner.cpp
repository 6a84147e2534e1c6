#include "bsdebranch/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "bsdebranch/errors.hpp"
#include "bsdebranch/problems.hpp"

namespace bsde {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double get_num(const json& j, const char* key, double fallback,
               double lo = -1e300, double hi = 1e300) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string(key) + ": not a number");
  const double v = j[key].get<double>();
  if (v < lo || v > hi) throw ConfigError(std::string(key) + ": out of range");
  return v;
}

std::string lifetime_name(const LifetimeDensity& lt) {
  return lt.kind == LifetimeDensity::Kind::exponential ? "exponential"
                                                       : "truncated-power";
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }

  RunConfig cfg;
  if (j.contains("problem")) cfg.problem = j["problem"].get<std::string>();
  bool known = false;
  for (const auto& n : problem_names()) known = known || n == cfg.problem;
  if (!known) throw ConfigError("unknown problem: " + cfg.problem);

  cfg.n_y = int(get_num(j, "n_y", cfg.n_y, 1, 10000));
  cfg.n_z = int(get_num(j, "n_z", cfg.n_z, 1, 10000));

  SolverConfig& s = cfg.solver;
  s.n_h = int(get_num(j, "n_h", s.n_h, 1, 100000));
  s.dx = get_num(j, "dx", s.dx, 1e-6, 10.0);
  s.dt = get_num(j, "dt", s.dt, 1e-9, 1.0);
  s.m_max = int(get_num(j, "m_max", s.m_max, 1, 1000));
  s.M = get_num(j, "M", s.M, 1e-9);
  s.variance_target = get_num(j, "variance_target", s.variance_target, 0.0);
  s.sample_cap = long(get_num(j, "sample_cap", double(s.sample_cap), 1));
  s.pilot = long(get_num(j, "pilot", double(s.pilot), 1));
  s.seed = std::uint64_t(get_num(j, "seed", double(s.seed), 0));
  s.threads = int(get_num(j, "threads", s.threads, 0, 4096));
  s.delta_tol = get_num(j, "delta_tol", s.delta_tol, 0.0);
  s.max_particles =
      long(get_num(j, "max_particles", double(s.max_particles), 1));
  s.box_margin_sigmas =
      get_num(j, "box_margin_sigmas", s.box_margin_sigmas, 0.0, 100.0);
  if (j.contains("facelift")) s.facelift_on = j["facelift"].get<bool>();
  if (j.contains("enforce_bounds"))
    s.enforce_bounds = j["enforce_bounds"].get<bool>();
  if (j.contains("g_control_variate"))
    s.g_control_variate = j["g_control_variate"].get<bool>();
  if (j.contains("a_control_variate"))
    s.a_control_variate = j["a_control_variate"].get<bool>();
  if (j.contains("gradient")) {
    const std::string g = j["gradient"].get<std::string>();
    if (g == "fd")
      s.gradient = GradientMode::finite_difference;
    else if (g == "malliavin")
      s.gradient = GradientMode::malliavin;
    else
      throw ConfigError("gradient: expected \"fd\" or \"malliavin\"");
  }
  if (j.contains("lifetime")) {
    const json& lt = j["lifetime"];
    const std::string kind = lt.value("kind", "exponential");
    if (kind == "exponential") {
      s.lifetime.kind = LifetimeDensity::Kind::exponential;
      s.lifetime.lambda = get_num(lt, "lambda", s.lifetime.lambda, 1e-9);
    } else if (kind == "truncated-power") {
      s.lifetime.kind = LifetimeDensity::Kind::truncated_power;
    } else {
      throw ConfigError("lifetime.kind: unknown value " + kind);
    }
  }

  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    cfg.sweep_axis = sw.value("axis", "");
    if (cfg.sweep_axis != "nh" && cfg.sweep_axis != "dx" &&
        cfg.sweep_axis != "mesh")
      throw ConfigError("sweep.axis: expected nh, dx or mesh");
    if (!sw.contains("values") || !sw["values"].is_array() ||
        sw["values"].empty())
      throw ConfigError("sweep.values: non-empty array required");
    for (const json& v : sw["values"]) {
      if (cfg.sweep_axis == "mesh") {
        if (!v.is_array() || v.size() != 2)
          throw ConfigError("sweep.values: mesh entries are [n_y, n_z]");
        cfg.sweep_mesh.emplace_back(v[0].get<int>(), v[1].get<int>());
      } else {
        cfg.sweep_values.push_back(v.get<double>());
      }
    }
  }
  return cfg;
}

std::string run_config_json(const RunConfig& cfg) {
  const SolverConfig& s = cfg.solver;
  json j;  // nlohmann objects are key-sorted, so the dump is canonical
  j["problem"] = cfg.problem;
  j["n_y"] = cfg.n_y;
  j["n_z"] = cfg.n_z;
  j["n_h"] = s.n_h;
  j["dx"] = s.dx;
  j["dt"] = s.dt;
  j["m_max"] = s.m_max;
  j["M"] = s.M;
  j["variance_target"] = s.variance_target;
  j["sample_cap"] = s.sample_cap;
  j["pilot"] = s.pilot;
  j["seed"] = s.seed;
  j["threads"] = s.threads;
  j["delta_tol"] = s.delta_tol;
  j["max_particles"] = s.max_particles;
  j["box_margin_sigmas"] = s.box_margin_sigmas;
  j["facelift"] = s.facelift_on;
  j["enforce_bounds"] = s.enforce_bounds;
  j["g_control_variate"] = s.g_control_variate;
  j["a_control_variate"] = s.a_control_variate;
  j["gradient"] =
      s.gradient == GradientMode::malliavin ? "malliavin" : "fd";
  j["lifetime"] = {{"kind", lifetime_name(s.lifetime)}};
  if (s.lifetime.kind == LifetimeDensity::Kind::exponential)
    j["lifetime"]["lambda"] = s.lifetime.lambda;
  if (!cfg.sweep_axis.empty()) {
    json vals = json::array();
    if (cfg.sweep_axis == "mesh")
      for (const auto& [a, b] : cfg.sweep_mesh) vals.push_back({a, b});
    else
      for (double v : cfg.sweep_values) vals.push_back(v);
    j["sweep"] = {{"axis", cfg.sweep_axis}, {"values", vals}};
  }
  return j.dump(2) + "\n";
}

SolveSummary run_solve(const RunConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const Problem prob = make_problem(cfg.problem, cfg.n_y, cfg.n_z);
  const auto wall0 = std::chrono::steady_clock::now();
  const PicardState st = run(prob, cfg.solver);
  const auto wall1 = std::chrono::steady_clock::now();

  SolveSummary sum;
  sum.wall_seconds = std::chrono::duration<double>(wall1 - wall0).count();

  {
    std::ofstream out(fs::path(out_dir) / "solution.csv");
    const GridFunction& u0 = st.u[0];
    out << "x,u_est";
    if (prob.analytic) out << ",u_exact,abs_err";
    out << "\n";
    for (std::size_t f = 0; f < u0.values.size(); ++f) {
      const Vec x = u0.node(f);
      bool in_box = true;
      for (int a = 0; a < u0.dim; ++a)
        if (x[a] < prob.report_lo[a] - 1e-9 ||
            x[a] > prob.report_hi[a] + 1e-9)
          in_box = false;
      if (!in_box) continue;
      out << fmt(x[0]);
      for (int a = 1; a < u0.dim; ++a) out << ";" << fmt(x[a]);
      out << "," << fmt(u0.values[f]);
      if (prob.analytic) {
        const double exact = prob.analytic(0.0, x);
        out << "," << fmt(exact) << "," << fmt(std::abs(u0.values[f] - exact));
      }
      out << "\n";
    }
  }

  {
    std::ofstream out(fs::path(out_dir) / "diagnostics.csv");
    out << "interval,node,n_used,theta,estimate\n";
    for (const NodeDiag& d : st.diag)
      out << d.interval << "," << d.node << "," << d.n_used << ","
          << fmt(d.theta) << "," << fmt(d.estimate) << "\n";
  }

  {
    std::ofstream out(fs::path(out_dir) / "manifest.json");
    out << run_config_json(cfg);
  }

  if (prob.analytic) {
    const ErrorReport rep = error_report(st, prob);
    sum.max_err = rep.max_err;
    sum.mean_err = rep.mean_err;
  }
  return sum;
}

void run_sweep(const RunConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "sweep.csv");
  out << "axis,value,n_y,n_z,max_err,mean_err,wall_seconds,status\n";

  const std::size_t n = cfg.sweep_axis == "mesh" ? cfg.sweep_mesh.size()
                                                 : cfg.sweep_values.size();
  for (std::size_t k = 0; k < n; ++k) {
    RunConfig rc = cfg;
    rc.sweep_axis.clear();
    rc.sweep_values.clear();
    rc.sweep_mesh.clear();
    double value = 0;
    if (cfg.sweep_axis == "nh") {
      value = cfg.sweep_values[k];
      rc.solver.n_h = int(std::lround(value));
    } else if (cfg.sweep_axis == "dx") {
      value = cfg.sweep_values[k];
      rc.solver.dx = value;
    } else {
      rc.n_y = cfg.sweep_mesh[k].first;
      rc.n_z = cfg.sweep_mesh[k].second;
      value = double(k);
    }
    const std::string sub =
        (fs::path(out_dir) / ("run_" + std::to_string(k))).string();
    std::string status = "ok";
    SolveSummary s;
    try {
      s = run_solve(rc, sub);
    } catch (const std::exception& e) {
      status = std::string("failed: ") + e.what();
      for (char& c : status)
        if (c == ',' || c == '\n') c = ';';
      s = SolveSummary{};
      s.max_err = std::nan("");
      s.mean_err = std::nan("");
    }
    out << cfg.sweep_axis << "," << fmt(value) << "," << rc.n_y << ","
        << rc.n_z << "," << fmt(s.max_err) << "," << fmt(s.mean_err) << ","
        << fmt(s.wall_seconds) << "," << status << "\n";
  }
}

std::string run_bounds(const RunConfig& cfg) {
  const Problem prob = make_problem(cfg.problem, cfg.n_y, cfg.n_z);
  BoundConstants bc;
  bc.M = cfg.solver.M;
  bc.T = prob.horizon;
  bc.c_mu_sigma = compute_c_mu_sigma(prob.coef);
  const LocalPolynomialDriver& drv = prob.drv;
  bc.f_sup = [&drv](double m) { return sup_f_circ(drv, m); };
  const HCircResult hc = compute_h_circ(bc);

  std::string rep;
  rep += "problem: " + cfg.problem + "\n";
  rep += "c_mu_sigma: " + fmt(bc.c_mu_sigma) + "\n";
  rep += "h_circ: " + fmt(hc.h_circ) + "\n";
  rep += "m_h_circ: " + fmt(hc.m_h_circ) + "\n";
  const double h = prob.horizon / double(cfg.solver.n_h);
  rep += "h: " + fmt(h) + "\n";
  rep += std::string("h_ok: ") + (h < hc.h_circ ? "yes" : "no") + "\n";

  const bool trunc =
      cfg.solver.lifetime.kind == LifetimeDensity::Kind::truncated_power;
  const double pad = cfg.solver.box_margin_sigmas * prob.coef.sigma_sup *
                     std::sqrt(prob.horizon);
  const CHats ch =
      compute_C_hats(bc, prob.coef, drv, prob.report_lo[0] - pad,
                     prob.report_hi[0] + pad, trunc);
  rep += "C0: " + fmt(ch.C0) + "\n";
  rep += "C1_hat: " + fmt(ch.C1_hat) + "\n";
  rep += "C2_hat: " + fmt(ch.C2_hat) + "\n";
  const HPrimeResult hp =
      compute_h_prime(ch.C1_hat, ch.C2_hat, int(drv.index_set.size()));
  rep += "h_prime: " + fmt(hp.h_prime) + "\n";
  rep += "m_h_prime: " + fmt(hp.m_h_prime) + "\n";
  if (trunc)
    rep += std::string("h_prime_ok: ") + (h < hp.h_prime ? "yes" : "no") + "\n";
  return rep;
}

void run_mc_oracle(const RunConfig& cfg, long n_paths,
                   const std::string& out_path, std::vector<double>* means,
                   std::vector<double>* std_errs) {
  const Problem prob = make_problem(cfg.problem, cfg.n_y, cfg.n_z);
  const int d = prob.coef.dim;
  const double dxv = cfg.solver.dx;
  const int inner = int(std::lround((prob.report_hi[0] - prob.report_lo[0]) / dxv));
  if (d != 1) throw ConfigError("mc-oracle: one-dimensional problems only");

  std::ofstream out(out_path);
  out << "x,mean,std_err,n\n";
  if (means) means->clear();
  if (std_errs) std_errs->clear();
  for (int node = 0; node <= inner; ++node) {
    const Vec x0 = Vec::scalar(prob.report_lo[0] + node * dxv);
    double mean = 0, m2 = 0;
    for (long s = 0; s < n_paths; ++s) {
      RngStream rng(cfg.solver.seed, 999, 0, std::uint64_t(node),
                    std::uint64_t(s));
      Vec x = x0;
      advance_euler(prob.coef, x, 0.0, prob.horizon, cfg.solver.dt, rng);
      const double g = prob.g(x);
      const double delta = g - mean;
      mean += delta / double(s + 1);
      m2 += delta * (g - mean);
    }
    const double se =
        n_paths > 1 ? std::sqrt(m2 / double(n_paths - 1) / double(n_paths))
                    : 0.0;
    out << fmt(x0[0]) << "," << fmt(mean) << "," << fmt(se) << "," << n_paths
        << "\n";
    if (means) means->push_back(mean);
    if (std_errs) std_errs->push_back(se);
  }
}

}  // namespace bsde
