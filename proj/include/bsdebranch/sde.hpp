#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bsdebranch/errors.hpp"
#include "bsdebranch/linalg.hpp"
#include "bsdebranch/rng.hpp"

namespace bsde {

// Coefficients of the forward diffusion dX = mu(X)dt + sigma(X)dW together
// with their Jacobians and the bounds the scheme relies on.
struct SdeCoefficients {
  int dim = 1;
  std::function<Vec(const Vec&)> mu;
  std::function<Mat(const Vec&)> sigma;
  std::function<Mat(const Vec&)> d_mu;              // Jacobian of mu
  std::function<Mat(const Vec&, int)> d_sigma;      // Jacobian of column i of sigma
  double a0 = 0;                                    // ellipticity floor
  double mu_sup = 0, sigma_sup = 0, d_mu_sup = 0, d_sigma_sup = 0;
};

// One discretized trajectory of (X, grad X) with its Brownian increments.
struct PathSample {
  std::vector<double> times;   // t0 = start, uniform dt, short last step
  std::vector<Vec> x;          // position per time
  std::vector<Mat> grad_x;     // tangent process per time, identity at start
  std::vector<Vec> dw;         // increment over [times[k], times[k+1]]
  std::uint64_t seed = 0;      // stream identifier used to generate the path
};

// Inverts sigma(x) with the ellipticity floor as a conditioning gate.
Mat invert_sigma(const SdeCoefficients& coef, const Mat& sig);

// Euler-Maruyama path with the tangent process carried alongside.
PathSample simulate_path(const SdeCoefficients& coef, const Vec& x0, double t0,
                         double t1, double dt, RngStream& rng);

// Discretized gradient weight (1/(s-t)) sum [sigma^-1 grad X]^T dW over the
// path's steps in [t, s], right-multiplied by grad X_t^{-1}.  Anchored at the
// path start that last factor is the identity.
Vec malliavin_weight(const SdeCoefficients& coef, const PathSample& path,
                     double t, double s);

// Lean stepping used by the branching estimator: advances x from t0 to t1
// without storing the path.  When tangent/wacc are given, the tangent process
// is evolved and the (unnormalized) integral sum [sigma^-1 grad X]^T dW is
// accumulated into *wacc.  tangent must be initialized by the caller
// (identity at particle birth).
void advance_euler(const SdeCoefficients& coef, Vec& x, double t0, double t1,
                   double dt, RngStream& rng, Mat* tangent = nullptr,
                   Vec* wacc = nullptr);

// Spot-checks ellipticity and the declared sup-norm bounds on random points
// of [lo,hi]^d.  Throws on violation.
void spot_check_coefficients(const SdeCoefficients& coef, double lo, double hi,
                             int n_points, RngStream& rng);

}  // namespace bsde
