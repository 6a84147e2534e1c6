#pragma once

#include <cstdint>
#include <vector>

#include "bsdebranch/driver.hpp"
#include "bsdebranch/grid.hpp"
#include "bsdebranch/sde.hpp"

namespace bsde {

// Particle lifetime law: exponential(lambda) or the truncated-power density
// rho(t) = (1/3) t^{-2/3} on [0,1].
struct LifetimeDensity {
  enum class Kind { exponential, truncated_power };
  Kind kind = Kind::exponential;
  double lambda = 0.4;

  double sample(RngStream& rng) const;
  double pdf(double t) const;
  double survival(double t) const;  // F-bar
};

struct BranchingConfig {
  LifetimeDensity lifetime;
  std::vector<double> offspring_probs;  // aligned with the driver's index set
  long max_particles = 1000000;
  double dt = 0.002;                 // Euler step inside the tree
  bool g_control_variate = true;     // subtract terminal(birth) for marks
  bool a_control_variate = true;     // same subtraction on the death weight
  bool sample_gradient = false;      // carry the root weight for V samples
};

// Time-indexed prior maps (fine single grid); nearest-time lookup.
struct PriorMaps {
  const std::vector<double>* times = nullptr;
  const std::vector<GridFunction>* u = nullptr;
  // v[i][component]: the Z-scaled gradient map at time i
  const std::vector<std::vector<GridFunction>>* v = nullptr;

  int nearest(double t) const;
};

struct SamplePair {
  double u = 0;
  Vec v;  // zero unless cfg.sample_gradient
};

// One branching-tree sample of (U, V) on [t, interval_end] with terminal
// condition `terminal`.  Throws ExplosionError past max_particles.
SamplePair sample_estimate(const BranchingConfig& cfg,
                           const SdeCoefficients& coef,
                           const LocalPolynomialDriver& drv, double t,
                           const Vec& x, double interval_end,
                           const GridFunction& terminal,
                           const PriorMaps& prior, RngStream& rng);

struct EstimateStats {
  double u_mean = 0;
  double u_std = 0;  // per-sample standard deviation
  Vec v_mean;
  Vec v_std;  // per-sample, per-component
  long n_used = 0;
};

// Pilot batch, then top up so that std/sqrt(n) meets variance_target
// (capped); streaming mean/variance.  Streams are derived per sample from
// (seed, k1, k2, k3, sample), so results do not depend on scheduling.
EstimateStats estimate_u_v(const BranchingConfig& cfg,
                           const SdeCoefficients& coef,
                           const LocalPolynomialDriver& drv, double t,
                           const Vec& x, double interval_end,
                           const GridFunction& terminal, const PriorMaps& prior,
                           double variance_target, long sample_cap,
                           long pilot, std::uint64_t seed, std::uint64_t k1,
                           std::uint64_t k2, std::uint64_t k3);

}  // namespace bsde
