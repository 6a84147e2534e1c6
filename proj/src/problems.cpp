#include "bsdebranch/problems.hpp"

#include <cmath>

#include "bsdebranch/errors.hpp"

namespace bsde {

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

SdeCoefficients paper_coefficients() {
  SdeCoefficients c;
  c.dim = 1;
  c.mu = [](const Vec& x) { return Vec::scalar(-0.5 * (x[0] + 0.2)); };
  c.sigma = [](const Vec& x) {
    return Mat::scalar(0.1 * (1.0 + 0.5 * clamp01(x[0])));
  };
  c.d_mu = [](const Vec&) { return Mat::scalar(-0.5); };
  c.d_sigma = [](const Vec& x, int) {
    return Mat::scalar(x[0] > 0.0 && x[0] < 1.0 ? 0.05 : 0.0);
  };
  c.a0 = 0.1;
  c.mu_sup = 1.1;  // on the padded simulation box
  c.sigma_sup = 0.15;
  c.d_mu_sup = 0.5;
  c.d_sigma_sup = 0.05;
  return c;
}

double paper_source(double t, const Vec& xv) {
  const double x = xv[0];
  const double sig = 0.1 * (1.0 + 0.5 * clamp01(x));
  const double mu = -0.5 * (x + 0.2);
  const double e = std::exp(0.5 * (t - 1.0));
  return 0.5 * e *
             (std::cos(x) * sig * sig / 2.0 - 0.5 * (1.0 + std::cos(x)) +
              mu * std::sin(x)) -
         2.0 / (4.0 + std::abs(std::sin(x) * (1.0 + std::cos(x))) *
                          std::exp(t - 1.0));
}

Problem paper_example(int n_y, int n_z) {
  Problem p;
  p.name = "paper-example";
  p.coef = paper_coefficients();
  p.horizon = 1.0;
  p.report_lo = Vec::scalar(-1.0);
  p.report_hi = Vec::scalar(1.0);
  p.g = [](const Vec& x) { return 0.5 * (1.0 + std::cos(x[0])); };
  p.analytic = [](double t, const Vec& x) {
    return 0.5 * (1.0 + std::cos(x[0])) * std::exp(0.5 * (t - 1.0));
  };
  p.drv = fit_from_driver(
      [](double y, double z) { return 0.5 / (1.0 + std::abs(y * z)); }, 0.0,
      1.0, -1.0, 1.0, n_y, n_z);
  p.drv.source = [](double t, const Vec& x) { return paper_source(t, x); };
  double ssup = 0;
  for (int it = 0; it <= 20; ++it)
    for (int ix = -40; ix <= 40; ++ix) {
      const double s =
          std::abs(paper_source(it / 20.0, Vec::scalar(ix * 0.05)));
      ssup = std::max(ssup, s);
    }
  p.drv.source_sup = 1.1 * ssup;
  p.drv.c_sup = std::max(p.drv.c_sup, p.drv.index_sup(0));
  return p;
}

Problem zero_driver(int, int) {
  Problem p;
  p.name = "zero-driver";
  p.coef = paper_coefficients();
  p.horizon = 1.0;
  p.report_lo = Vec::scalar(-1.0);
  p.report_hi = Vec::scalar(1.0);
  p.g = [](const Vec& x) { return 0.5 * (1.0 + std::cos(x[0])); };
  p.drv = make_monomial_driver(1, DriverIndex{{0, 0, 0, 0}}, 0.0);
  return p;
}

Problem gradient_check(int, int) {
  Problem p;
  p.name = "gradient-check";
  SdeCoefficients c;
  c.dim = 1;
  c.mu = [](const Vec& x) { return Vec::scalar(-0.5 * x[0]); };
  c.sigma = [](const Vec&) { return Mat::scalar(1.0); };
  c.d_mu = [](const Vec&) { return Mat::scalar(-0.5); };
  c.d_sigma = [](const Vec&, int) { return Mat::scalar(0.0); };
  c.a0 = 1.0;
  c.mu_sup = 1.6;
  c.sigma_sup = 1.0;
  c.d_mu_sup = 0.5;
  c.d_sigma_sup = 0.0;
  p.coef = c;
  p.horizon = 0.25;
  p.report_lo = Vec::scalar(-1.0);
  p.report_hi = Vec::scalar(1.0);
  p.g = [](const Vec& x) { return 0.5 * (1.0 + std::cos(x[0])); };
  // OU semigroup in closed form: X_s | x ~ N(x e^{-s/2}, 1 - e^{-s})
  p.analytic = [](double t, const Vec& x) {
    const double tau = 0.25 - t;
    const double m = x[0] * std::exp(-0.5 * tau);
    const double s2 = 1.0 - std::exp(-tau);
    return std::exp(-0.25 * tau) * 0.5 *
           (1.0 + std::cos(m) * std::exp(-0.5 * s2));
  };
  p.drv = make_monomial_driver(1, DriverIndex{{1, 0, 0, 0}}, -0.25);
  return p;
}

}  // namespace

Problem make_problem(const std::string& name, int n_y, int n_z) {
  if (name == "paper-example") return paper_example(n_y, n_z);
  if (name == "zero-driver") return zero_driver(n_y, n_z);
  if (name == "gradient-check") return gradient_check(n_y, n_z);
  throw ConfigError("unknown problem: " + name);
}

std::vector<std::string> problem_names() {
  return {"paper-example", "zero-driver", "gradient-check"};
}

}  // namespace bsde
