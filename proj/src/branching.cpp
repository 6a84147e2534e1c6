#include "bsdebranch/branching.hpp"

#include <algorithm>
#include <cmath>

#include "bsdebranch/errors.hpp"

namespace bsde {

double LifetimeDensity::sample(RngStream& rng) const {
  const double u = rng.uniform();
  if (kind == Kind::exponential) return -std::log(u) / lambda;
  return u * u * u;  // inverse CDF of (1/3) t^{-2/3} on [0,1]
}

double LifetimeDensity::pdf(double t) const {
  if (kind == Kind::exponential) return lambda * std::exp(-lambda * t);
  if (t <= 0 || t > 1) return 0;
  return std::pow(t, -2.0 / 3.0) / 3.0;
}

double LifetimeDensity::survival(double t) const {
  if (kind == Kind::exponential) return std::exp(-lambda * t);
  if (t <= 0) return 1;
  if (t >= 1) return 0;
  return 1.0 - std::cbrt(t);
}

int PriorMaps::nearest(double t) const {
  if (times == nullptr || times->empty())
    throw ConfigError("prior maps are empty");
  // uniform grids in practice; short linear scan is fine and exact
  int best = 0;
  double dist = std::abs((*times)[0] - t);
  for (std::size_t i = 1; i < times->size(); ++i) {
    const double d = std::abs((*times)[i] - t);
    if (d < dist) {
      dist = d;
      best = int(i);
    }
  }
  return best;
}

namespace {

struct Pending {
  Vec x;
  double t_birth;
  int mark;  // 0..q_count
};

}  // namespace

SamplePair sample_estimate(const BranchingConfig& cfg,
                           const SdeCoefficients& coef,
                           const LocalPolynomialDriver& drv, double t,
                           const Vec& x, double interval_end,
                           const GridFunction& terminal,
                           const PriorMaps& prior, RngStream& rng) {
  if (!(t < interval_end))
    throw std::invalid_argument("sample_estimate: need t < interval_end");
  if (cfg.lifetime.kind == LifetimeDensity::Kind::truncated_power &&
      interval_end - t >= 1.0)
    throw ConfigError("truncated-power lifetime needs interval length < 1");
  if (cfg.offspring_probs.size() != drv.index_set.size())
    throw ConfigError("offspring probabilities do not match the driver index set");

  std::vector<Pending> stack;
  stack.push_back({x, t, 0});

  long count = 0;
  double prod = 1.0;  // all non-root particle factors
  double root_u = 1.0, root_v = 1.0;
  Vec root_w(coef.dim);
  double root_tau = 0;
  bool is_root = true;
  std::vector<KernelWeight> kw;

  while (!stack.empty()) {
    Pending p = stack.back();
    stack.pop_back();
    if (++count > cfg.max_particles)
      throw ExplosionError("branching tree exceeded the particle cap");

    const double delta = cfg.lifetime.sample(rng);
    const double remaining = interval_end - p.t_birth;
    const bool survives = delta >= remaining;
    const double seg_end = survives ? interval_end : p.t_birth + delta;
    // Malliavin-weight horizon floored at one Euler step: the continuous
    // 1/tau weight has a log-divergent second moment, and a single tiny
    // lifetime can poison a node mean; the floor is the same order as the
    // Euler bias and caps the weight variance.
    const double tau = std::max(seg_end - p.t_birth, cfg.dt);

    const bool root_here = is_root;
    is_root = false;
    const bool need_weight = p.mark != 0 || (root_here && cfg.sample_gradient);
    Mat tangent = Mat::identity(coef.dim);
    Vec wacc(coef.dim);
    Vec xe = p.x;
    advance_euler(coef, xe, p.t_birth, seg_end, cfg.dt, rng,
                  need_weight ? &tangent : nullptr,
                  need_weight ? &wacc : nullptr);

    double mark_weight = 1.0;
    if (p.mark != 0)
      mark_weight =
          dot(drv.basis[std::size_t(p.mark - 1)](xe), wacc) / tau;

    if (root_here && cfg.sample_gradient) {
      root_w = wacc;
      root_tau = tau;
    }

    if (survives) {
      const double fbar = cfg.lifetime.survival(remaining);
      const double val = terminal.interpolate(xe);
      const double birth_val = terminal.interpolate(p.x);
      double g = val;
      if (p.mark != 0 && cfg.g_control_variate) g -= birth_val;
      g /= fbar;
      if (root_here) {
        root_u = g * mark_weight;
        // the V sample treats the root like a marked particle: subtracting
        // the (independent) birth value keeps the mean and kills the
        // 1/tau variance of the root weight
        root_v = (cfg.g_control_variate ? (val - birth_val) / fbar : g) *
                 mark_weight;
      } else {
        prod *= g * mark_weight;
      }
    } else {
      // offspring index
      const double u = rng.uniform();
      double acc = 0;
      int li = int(drv.index_set.size()) - 1;
      for (std::size_t i = 0; i < cfg.offspring_probs.size(); ++i) {
        acc += cfg.offspring_probs[i];
        if (u <= acc) {
          li = int(i);
          break;
        }
      }

      auto coeff_blend = [&](double when, const Vec& at) {
        const int pi = prior.nearest(when);
        const double y_prior = (*prior.u)[std::size_t(pi)].interpolate(at);
        // prior maps store the Z-scaled gradient; the kernels localize in
        // the driver's z-slot, which is the plain gradient
        Vec zeta(coef.dim);
        {
          Vec vbar(coef.dim);
          const std::vector<GridFunction>& vg = (*prior.v)[std::size_t(pi)];
          for (int c = 0; c < coef.dim; ++c)
            vbar[c] = vg[std::size_t(c)].interpolate(at);
          const Mat isig = invert_sigma(coef, coef.sigma(at));
          zeta = matTvec(isig, vbar);  // sigma^{-T} v
        }
        drv.kernel_weights(y_prior, zeta, kw);
        double s = 0;
        for (const KernelWeight& k : kw)
          s += drv.coeff_at(k.j, li, when, at) * k.w;
        return s;
      };
      double a = coeff_blend(seg_end, xe);
      // same weight subtraction as for G: for marked particles the
      // birth-anchored value is killed by E[W] = 0, and the difference is
      // O(|X_death - X_birth|), which tames the 1/tau weight's tail
      if (p.mark != 0 && cfg.a_control_variate)
        a -= coeff_blend(p.t_birth, p.x);
      a /= cfg.offspring_probs[std::size_t(li)] * cfg.lifetime.pdf(delta);

      if (root_here) {
        root_u = a * mark_weight;
        root_v = root_u;
      } else {
        prod *= a * mark_weight;
      }

      // spawn: first l0 children carry mark 0, next l1 carry mark 1, ...
      const DriverIndex& idx = drv.index_set[std::size_t(li)];
      for (int q = 0; q <= drv.q_count; ++q)
        for (int c = 0; c < idx.l[std::size_t(q)]; ++c)
          stack.push_back({xe, seg_end, q});
    }
  }

  SamplePair out;
  out.u = root_u * prod;
  out.v = Vec(coef.dim);
  if (cfg.sample_gradient && root_tau > 0) {
    out.v = root_w;
    out.v *= root_v * prod / root_tau;
  }
  return out;
}

EstimateStats estimate_u_v(const BranchingConfig& cfg,
                           const SdeCoefficients& coef,
                           const LocalPolynomialDriver& drv, double t,
                           const Vec& x, double interval_end,
                           const GridFunction& terminal, const PriorMaps& prior,
                           double variance_target, long sample_cap,
                           long pilot, std::uint64_t seed, std::uint64_t k1,
                           std::uint64_t k2, std::uint64_t k3) {
  if (!(variance_target > 0))
    throw std::invalid_argument("estimate_u_v: variance_target must be positive");
  if (sample_cap < pilot)
    throw std::invalid_argument("estimate_u_v: sample_cap below the pilot size");

  double mean = 0, m2 = 0;
  Vec vsum(coef.dim), vsq(coef.dim);
  long n = 0, finite = 0;

  auto draw = [&](long s) {
    RngStream rng(seed, k1, k2, k3, std::uint64_t(s));
    const SamplePair sp =
        sample_estimate(cfg, coef, drv, t, x, interval_end, terminal, prior, rng);
    ++n;
    if (!std::isfinite(sp.u) || !sp.v.finite()) return;
    ++finite;
    const double d = sp.u - mean;
    mean += d / double(finite);
    m2 += d * (sp.u - mean);
    vsum += sp.v;
    for (int c = 0; c < coef.dim; ++c) vsq[c] += sp.v[c] * sp.v[c];
  };

  for (long s = 0; s < pilot; ++s) draw(s);
  if (finite == 0) throw EstimatorError("all pilot samples were non-finite");

  const double theta =
      finite > 1 ? std::sqrt(m2 / double(finite - 1)) : 0.0;
  long target_n = pilot;
  if (theta > 0) {
    const double want = std::ceil(std::pow(theta / variance_target, 2.0));
    target_n = want > double(sample_cap) ? sample_cap
                                         : std::max(pilot, long(want));
  }
  for (long s = pilot; s < target_n; ++s) draw(s);
  if (finite == 0) throw EstimatorError("all samples were non-finite");

  EstimateStats st;
  st.u_mean = mean;
  st.u_std = finite > 1 ? std::sqrt(m2 / double(finite - 1)) : 0.0;
  st.v_mean = vsum;
  st.v_mean *= 1.0 / double(finite);
  st.v_std = Vec(coef.dim);
  if (finite > 1)
    for (int c = 0; c < coef.dim; ++c) {
      const double var = (vsq[c] - double(finite) * st.v_mean[c] * st.v_mean[c]) /
                         double(finite - 1);
      st.v_std[c] = std::sqrt(std::max(0.0, var));
    }
  st.n_used = n;
  return st;
}

}  // namespace bsde
