#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "bsdebranch/bounds.hpp"
#include "bsdebranch/errors.hpp"
#include "bsdebranch/problems.hpp"

using namespace bsde;

namespace {

BoundConstants make_bc(double M, double C, double fsup_const, double T = 1.0) {
  BoundConstants bc;
  bc.M = M;
  bc.c_mu_sigma = C;
  bc.T = T;
  bc.f_sup = [fsup_const](double) { return fsup_const; };
  return bc;
}

SdeCoefficients unit_coefficients() {
  SdeCoefficients c;
  c.dim = 1;
  c.mu = [](const Vec&) { return Vec(1); };
  c.sigma = [](const Vec&) { return Mat::identity(1); };
  c.d_mu = [](const Vec&) { return Mat::zero(1); };
  c.d_sigma = [](const Vec&, int) { return Mat::zero(1); };
  c.a0 = 1.0;
  c.mu_sup = 0.0;
  c.sigma_sup = 1.0;
  c.d_mu_sup = 0.0;
  c.d_sigma_sup = 0.0;
  return c;
}

}  // namespace

TEST_CASE("zero driver: h_circ is the horizon, M grows by the flow factor") {
  const BoundConstants bc = make_bc(1.0, 0.5, 0.0);
  const HCircResult r = compute_h_circ(bc);
  CHECK(r.h_circ == doctest::Approx(1.0));
  CHECK(r.m_h_circ == doctest::Approx(std::exp(0.5)).epsilon(1e-9));
}

TEST_CASE("hand-evaluated feasibility pair") {
  // M = 1, C = 0.5, f_sup = 2, h = 0.1:
  // condition 1: M_h >= 1.2; condition 2: M_h >= e^{0.05} + 0.5*2*sqrt(0.1)
  const BoundConstants bc = make_bc(1.0, 0.5, 2.0);
  const auto m = feasible_m(bc, 0.1);
  REQUIRE(m.has_value());
  const double expect = std::exp(0.05) + std::sqrt(0.1);
  CHECK(*m == doctest::Approx(expect).epsilon(1e-6));
  CHECK(*m == doctest::Approx(1.367499).epsilon(1e-5));
}

TEST_CASE("feasibility is monotone on an h ladder") {
  BoundConstants bc = make_bc(1.0, 0.5, 0.0);
  bc.f_sup = [](double m) { return 0.5 * m * m; };  // superlinear driver
  double prev = 1e300;
  bool was_feasible = false;
  for (double h = 0.8; h > 1e-3; h *= 0.5) {
    const auto m = feasible_m(bc, h);
    if (!m.has_value()) {
      CHECK(!was_feasible);  // infeasible region is an upper interval of h
      continue;
    }
    was_feasible = true;
    CHECK(*m <= prev * (1.0 + 1e-12));
    prev = *m;
  }
  CHECK(was_feasible);
}

TEST_CASE("infeasible driver raises") {
  BoundConstants bc = make_bc(1.0, 0.5, 0.0);
  bc.f_sup = [](double m) { return 1e6 * (1.0 + m * m * m); };
  CHECK_THROWS_AS(compute_h_circ(bc), BoundViolationError);
}

TEST_CASE("moment constants by hand substitution (sigma = I, mu = 0, d = 1)") {
  const SdeCoefficients coef = unit_coefficients();
  const LocalPolynomialDriver drv =
      make_monomial_driver(1, DriverIndex{{1, 0, 0, 0}}, 1.0);
  BoundConstants bc = make_bc(1.0, 0.0, 0.0);
  const CHats ch = compute_C_hats(bc, coef, drv, -1.0, 1.0, false);

  // lambda bounds sample to zero, so C_Q = 0 and
  // C0 = 9^3 (1 + (4/3)^4) (1 + (1 + 0 + 1)) = 9^3 (1 + (4/3)^4) * 3
  const double c0 = std::pow(9.0, 3) * (1.0 + std::pow(4.0 / 3.0, 4)) * 3.0;
  CHECK(ch.C0 == doctest::Approx(c0).epsilon(1e-9));
  CHECK(ch.lambda_dmu == doctest::Approx(0.0));
  CHECK(ch.lambda_dsigma == doctest::Approx(0.0));

  // C1 = 2 max(1, M, 2^3 (M sqrt(1))^4 (C0 + 0)) = 16 C0  (mu = 0 kills the
  // second summand); C2 = C_bdg C0 with C_bdg = 6^4/... = (6)^2 (4/3)^8
  const double c_bdg = std::pow(6.0, 2) * std::pow(4.0 / 3.0, 8);
  CHECK(ch.C1_hat == doctest::Approx(16.0 * c0).epsilon(1e-9));
  CHECK(ch.C2_hat == doctest::Approx(c_bdg * c0).epsilon(1e-9));
}

TEST_CASE("C1 is at least 2") {
  const SdeCoefficients coef = unit_coefficients();
  const LocalPolynomialDriver drv =
      make_monomial_driver(1, DriverIndex{{0, 0, 0, 0}}, 0.0);
  for (double M : {1e-6, 0.5, 1.0, 3.0}) {
    BoundConstants bc = make_bc(M, 0.0, 0.0);
    const CHats ch = compute_C_hats(bc, coef, drv, -1.0, 1.0, false);
    CHECK(ch.C1_hat >= 2.0);
  }
}

TEST_CASE("truncated-power density factor (3 ||c||/p)^3") {
  const SdeCoefficients coef = unit_coefficients();
  const LocalPolynomialDriver drv =
      make_monomial_driver(1, DriverIndex{{1, 0, 0, 0}}, 0.5);
  BoundConstants bc = make_bc(1.0, 0.0, 0.0);
  const CHats plain = compute_C_hats(bc, coef, drv, -1.0, 1.0, false);
  const CHats trunc = compute_C_hats(bc, coef, drv, -1.0, 1.0, true);
  // single index: p = 1, ||c|| = 0.5, j_count = 1 => factor (3*0.5)^3
  CHECK(trunc.C2_hat ==
        doctest::Approx(plain.C2_hat * std::pow(1.5, 3)).epsilon(1e-9));
  CHECK(trunc.C1_hat == doctest::Approx(plain.C1_hat));
}

TEST_CASE("M_h' fourth power closed form") {
  // C1 = 2, C2 = 1, |L| = 2, h' = 0.1: (1/2 - 0.1*3*1)^{-1} = 5
  CHECK(m_hprime_fourth(2.0, 1.0, 2, 0.1) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(m_hprime_fourth(2.0, 1.0, 2, 0.2), BoundViolationError);
}

TEST_CASE("compute_h_prime") {
  SUBCASE("strictly below the explosion threshold") {
    const HPrimeResult r = compute_h_prime(2.0, 1.0, 2);
    const double threshold = std::min(1.0, 0.5 / 3.0);
    CHECK(r.h_prime < threshold);
    CHECK(r.h_prime == doctest::Approx(0.9 * threshold));
    CHECK(r.m_h_prime ==
          doctest::Approx(std::pow(m_hprime_fourth(2.0, 1.0, 2, r.h_prime), 0.25)));
  }
  SUBCASE("C2 -> 0 limit approaches (1, C1^{1/4})") {
    const HPrimeResult r = compute_h_prime(2.0, 1e-12, 2);
    CHECK(r.h_prime == doctest::Approx(0.9));
    CHECK(r.m_h_prime == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-6));
  }
  SUBCASE("linear driver degenerates") {
    const HPrimeResult r = compute_h_prime(5.0, 1.0, 1);
    CHECK(r.h_prime == 1.0);
    CHECK(r.m_h_prime == doctest::Approx(std::pow(5.0, 0.25)));
  }
}

TEST_CASE("eta ODE closed forms") {
  SUBCASE("linear: eta = C1 e^{C2 t}") {
    const std::vector<double> eta = solve_eta_ode(2.0, 0.7, {1}, 0.5);
    const double dt = 0.5 / double(eta.size() - 1);
    for (std::size_t k = 0; k < eta.size(); k += 100) {
      const double t = dt * double(k);
      CHECK(eta[k] == doctest::Approx(2.0 * std::exp(0.7 * t)).epsilon(1e-6));
    }
  }
  SUBCASE("Riccati: eta = C1 / (1 - C1 C2 t)") {
    const double C1 = 1.5, C2 = 0.4, T = 1.0;  // blow-up at t = 1/(C1 C2) = 1.67
    const std::vector<double> eta = solve_eta_ode(C1, C2, {2}, T);
    const double dt = T / double(eta.size() - 1);
    for (std::size_t k = 0; k < eta.size(); k += 100) {
      const double t = dt * double(k);
      CHECK(eta[k] == doctest::Approx(C1 / (1.0 - C1 * C2 * t)).epsilon(1e-6));
    }
  }
  SUBCASE("monotone nondecreasing") {
    const std::vector<double> eta = solve_eta_ode(1.2, 0.3, {0, 1, 2}, 0.4);
    for (std::size_t k = 1; k < eta.size(); ++k) CHECK(eta[k] >= eta[k - 1]);
  }
  SUBCASE("step halving self-consistency") {
    const std::vector<double> a = solve_eta_ode(1.5, 0.4, {1, 2}, 0.8, 0, 1000);
    const std::vector<double> b = solve_eta_ode(1.5, 0.4, {1, 2}, 0.8, 0, 2000);
    CHECK(std::abs(a.back() - b.back()) < 1e-8);
  }
  SUBCASE("blow-up raises") {
    CHECK_THROWS_AS(solve_eta_ode(2.0, 2.0, {3}, 1.0), BoundViolationError);
  }
  SUBCASE("cap violation raises") {
    CHECK_THROWS_AS(solve_eta_ode(2.0, 0.7, {1}, 0.5, 2.5), BoundViolationError);
  }
}

TEST_CASE("c_mu_sigma formula") {
  SdeCoefficients c = unit_coefficients();
  c.d_mu_sup = 0.5;
  c.d_sigma_sup = 0.1;
  CHECK(compute_c_mu_sigma(c) == doctest::Approx(0.5 + 0.005));
}

TEST_CASE("built-in example configuration clears the step-size gate") {
  const Problem prob = make_problem("paper-example", 5, 5);
  BoundConstants bc;
  bc.M = 1.0;
  bc.T = prob.horizon;
  bc.c_mu_sigma = compute_c_mu_sigma(prob.coef);
  const LocalPolynomialDriver& drv = prob.drv;
  bc.f_sup = [&drv](double m) { return sup_f_circ(drv, m); };
  const HCircResult r = compute_h_circ(bc);
  CHECK(r.h_circ > 0.05);  // the reference run uses h = 1/20
  CHECK(r.m_h_circ >= 1.0);
}
