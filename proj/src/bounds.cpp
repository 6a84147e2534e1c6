#include "bsdebranch/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "bsdebranch/errors.hpp"
#include "bsdebranch/rng.hpp"

namespace bsde {

double compute_c_mu_sigma(const SdeCoefficients& coef) {
  return coef.d_mu_sup + double(coef.dim) * coef.d_sigma_sup * coef.d_sigma_sup / 2.0;
}

std::optional<double> feasible_m(const BoundConstants& bc, double h) {
  const double C = bc.c_mu_sigma;
  const double sq = std::sqrt(h);
  double m = bc.M;
  for (int it = 0; it < 2000; ++it) {
    const double fs = bc.f_sup(m);
    const double next =
        std::max(bc.M + fs * h, bc.M * std::exp(C * h) + C * fs * sq);
    if (!std::isfinite(next) || next > 1e9) return std::nullopt;
    if (next <= m * (1.0 + 1e-13)) return std::max(m, next);
    m = next;
  }
  return std::nullopt;
}

HCircResult compute_h_circ(const BoundConstants& bc) {
  if (auto m = feasible_m(bc, bc.T)) return {bc.T, *m};
  double lo = 0, hi = bc.T;  // feasible at lo+ (h -> 0 gives M_h -> M-ish)
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible_m(bc, mid))
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * bc.T) break;
  }
  if (lo <= 0) throw BoundViolationError(
      "no feasible (h, M_h) pair below the horizon: driver bound too large");
  auto m = feasible_m(bc, lo);
  return {lo, *m};
}

namespace {

double sample_lambda(const std::function<Mat(const Vec&)>& jac, int dim,
                     double lo, double hi, RngStream& rng) {
  double lam = -1e300;
  for (int p = 0; p < 4096; ++p) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = lo + (hi - lo) * rng.uniform();
    lam = std::max(lam, max_eig_sym(jac(x)));
  }
  return lam + 0.1 * std::abs(lam);  // safety margin
}

}  // namespace

CHats compute_C_hats(const BoundConstants& bc, const SdeCoefficients& coef,
                     const LocalPolynomialDriver& drv, double lo, double hi,
                     bool truncated_power_density) {
  const double rho = double(kVarrho);
  RngStream rng(0x90e1u, 77);
  const double lam_dmu = sample_lambda(coef.d_mu, coef.dim, lo, hi, rng);
  double lam_dsig = -1e300;
  for (int i = 0; i < coef.dim; ++i) {
    RngStream r2(0x90e1u, 78, std::uint64_t(i));
    lam_dsig = std::max(
        lam_dsig, sample_lambda([&](const Vec& x) { return coef.d_sigma(x, i); },
                                coef.dim, lo, hi, r2));
  }
  if (!std::isfinite(lam_dmu) || !std::isfinite(lam_dsig))
    throw BoundViolationError("unbounded Jacobian eigenvalue sample");

  const double lam_inv = 1.0 / (coef.a0 * coef.a0);  // (sigma sigma^T)^-1 bound
  const double c_q = rho * lam_dmu + double(coef.dim) * rho * (rho - 1.0) * lam_dsig / 2.0;
  const double c_bdg = std::pow(rho * (rho - 1.0) / 2.0, rho / 2.0) *
                       std::pow(rho / (rho - 1.0), rho * rho / 2.0);
  const double c0 = std::pow(9.0, rho - 1.0) *
                    (1.0 + std::pow(rho / (rho - 1.0), rho)) *
                    (1.0 + (1.0 + std::pow(std::abs(lam_dmu * bc.T), rho) +
                            std::exp(c_q * bc.T)));

  const double d = double(coef.dim);
  const double c1 =
      2.0 * std::max({1.0, bc.M,
                      std::pow(2.0, rho - 1.0) * std::pow(bc.M * std::sqrt(d), rho) *
                          (c0 + std::pow(coef.mu_sup, rho) * std::pow(bc.T, rho / 2.0) *
                                    c_bdg * c0 * std::pow(lam_inv, rho / 2.0))});

  double c2 = c_bdg * c0 * std::pow(lam_inv, rho / 2.0);
  if (truncated_power_density) {
    // with rho(t) = (1/3) t^{-2/3}: t^{-rho/(2(rho-1))} / rho(t) = 3
    const std::vector<double> p = drv.offspring_probs();
    double fac = 0;
    for (std::size_t li = 0; li < p.size(); ++li) {
      const double c_sup = drv.index_sup(int(li));
      if (c_sup <= 0) continue;
      fac = std::max(fac, std::pow(3.0 * c_sup / p[li], rho - 1.0));
    }
    if (fac > 0) c2 *= double(drv.j_count) * fac;
  }
  return {c1, c2, c0, lam_dmu, lam_dsig};
}

double m_hprime_fourth(double C1_hat, double C2_hat, int card_L, double h_prime) {
  if (card_L <= 1) return C1_hat;
  const double e = double(card_L - 1);
  const double inner = std::pow(C1_hat, -e) - h_prime * double(card_L + 1) * e * C2_hat;
  if (!(inner > 0))
    throw BoundViolationError("m_hprime_fourth: h' beyond the explosion threshold");
  return std::pow(inner, -1.0 / e);
}

HPrimeResult compute_h_prime(double C1_hat, double C2_hat, int card_L) {
  if (C1_hat < 1.0 || C2_hat <= 0)
    throw BoundViolationError("compute_h_prime: need C1 >= 1 and C2 > 0");
  if (card_L <= 1) return {1.0, std::pow(C1_hat, 0.25)};
  const double e = double(card_L - 1);
  const double threshold =
      std::min(1.0, std::pow(C1_hat, -e) / (double(card_L + 1) * e * C2_hat));
  const double h = 0.9 * threshold;
  return {h, std::pow(m_hprime_fourth(C1_hat, C2_hat, card_L, h), 0.25)};
}

std::vector<double> solve_eta_ode(double C1_hat, double C2_hat,
                                  const std::vector<int>& index_norms,
                                  double horizon, double cap, long steps) {
  if (!(horizon > 0)) throw std::invalid_argument("solve_eta_ode: need horizon > 0");
  const long n = std::max(1000L, steps);  // step <= horizon / 1000
  const double dt = horizon / double(n);
  auto f = [&](double eta) {
    double s = 0;
    for (int nrm : index_norms) s += std::pow(eta, double(nrm));
    return C2_hat * s;
  };
  std::vector<double> out;
  out.reserve(std::size_t(n) + 1);
  double eta = C1_hat;
  out.push_back(eta);
  for (long k = 0; k < n; ++k) {
    const double k1 = f(eta);
    const double k2 = f(eta + 0.5 * dt * k1);
    const double k3 = f(eta + 0.5 * dt * k2);
    const double k4 = f(eta + dt * k3);
    eta += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(eta) || eta > 1e300)
      throw BoundViolationError("solve_eta_ode: blow-up before the horizon");
    if (cap > 0 && eta > cap * (1.0 + 1e-9))
      throw BoundViolationError("solve_eta_ode: eta exceeds the declared cap");
    out.push_back(eta);
  }
  return out;
}

}  // namespace bsde
