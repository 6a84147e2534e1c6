#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bsdebranch/driver.hpp"
#include "bsdebranch/sde.hpp"

namespace bsde {

inline constexpr int kVarrho = 4;  // moment order of the estimator bounds

struct BoundConstants {
  double M = 1.0;           // solution bound / Lipschitz level
  double c_mu_sigma = 0;    // gradient-flow constant
  std::function<double(double)> f_sup;  // M_cap -> sup bound of |f|
  double C1_hat = 0, C2_hat = 0;
  int card_L = 1;
  double T = 1.0;
};

// ||Dmu|| + d ||Dsigma||^2 / 2: a valid growth constant for the tangent flow
double compute_c_mu_sigma(const SdeCoefficients& coef);

// Inner fixed point: smallest M_h >= M satisfying both step-size
// inequalities for a given h; empty when the iteration diverges.
std::optional<double> feasible_m(const BoundConstants& bc, double h);

// Largest feasible h (bisection) together with its M_h.
struct HCircResult { double h_circ; double m_h_circ; };
HCircResult compute_h_circ(const BoundConstants& bc);

// Closed-form moment constants; eigenvalue bounds sampled over [lo,hi]^d
// with a 10% margin, ellipticity floor supplies the inverse-covariance bound.
struct CHats { double C1_hat; double C2_hat; double C0; double lambda_dmu; double lambda_dsigma; };
CHats compute_C_hats(const BoundConstants& bc, const SdeCoefficients& coef,
                     const LocalPolynomialDriver& drv, double lo, double hi,
                     bool truncated_power_density);

// (M_{h'})^4 at a given h' (the displayed closed form)
double m_hprime_fourth(double C1_hat, double C2_hat, int card_L, double h_prime);

struct HPrimeResult { double h_prime; double m_h_prime; };
// h' = 0.9 x the strict threshold; card_L == 1 degenerates to (1, C1^{1/4}).
HPrimeResult compute_h_prime(double C1_hat, double C2_hat, int card_L);

// eta' = C2 sum_l eta^{||l||_1}, eta(0) = C1; RK4 with step <= horizon/1000.
// Throws BoundViolationError on blow-up or when a cap is given and exceeded.
std::vector<double> solve_eta_ode(double C1_hat, double C2_hat,
                                  const std::vector<int>& index_norms,
                                  double horizon, double cap = 0,
                                  long steps = 1000);

}  // namespace bsde
