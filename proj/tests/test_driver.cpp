#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "bsdebranch/driver.hpp"
#include "bsdebranch/errors.hpp"
#include "bsdebranch/rng.hpp"

using namespace bsde;

namespace {

double fhat_paper(double y, double z) { return 0.5 / (1.0 + std::abs(y * z)); }

double fbar1(const LocalPolynomialDriver& d, double y, double z) {
  return d.eval_f_bar(0.0, Vec::scalar(0.0), y, Vec::scalar(z));
}

double dense_fit_error(const LocalPolynomialDriver& d, int n) {
  double worst = 0;
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= n; ++k) {
      const double y = d.y_lo + (d.y_hi - d.y_lo) * i / double(n);
      const double z = d.z_lo + (d.z_hi - d.z_lo) * k / double(n);
      worst = std::max(worst, std::abs(fbar1(d, y, z) - fhat_paper(y, z)));
    }
  return worst;
}

}  // namespace

TEST_CASE("zero coefficients evaluate to zero") {
  const LocalPolynomialDriver d = make_monomial_driver(1, DriverIndex{{0, 0, 0, 0}}, 0.0);
  CHECK(d.eval_f_circ(0.0, Vec::scalar(0.3), 2.0, Vec::scalar(-1.0), 0.5,
                      Vec::scalar(0.1)) == 0.0);
  CHECK(fbar1(d, 1.0, 1.0) == 0.0);
  CHECK(sup_f_circ(d, 3.0) == 0.0);
}

TEST_CASE("identity-in-y monomial driver") {
  const LocalPolynomialDriver d = make_monomial_driver(1, DriverIndex{{1, 0, 0, 0}}, 1.0);
  for (double y : {-2.0, -0.3, 0.0, 1.7})
    CHECK(d.eval_f_circ(0.0, Vec::scalar(0.0), y, Vec::scalar(9.0), 0.0,
                        Vec::scalar(0.0)) == doctest::Approx(y));
  CHECK(sup_f_circ(d, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("monomial driver with gradient power") {
  const LocalPolynomialDriver d =
      make_monomial_driver(1, DriverIndex{{1, 2, 0, 0}}, 0.5);
  // 0.5 * y * z^2
  CHECK(d.eval_f_circ(0.0, Vec::scalar(0.0), 2.0, Vec::scalar(3.0), 0.0,
                      Vec::scalar(0.0)) == doctest::Approx(0.5 * 2.0 * 9.0));
}

TEST_CASE("spline fit reproduces fhat at spline nodes") {
  const LocalPolynomialDriver d =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 20, 20);
  for (int iy = 0; iy <= 20; ++iy)
    for (int iz = 0; iz <= 20; ++iz) {
      const double y = iy / 20.0;
      const double z = -1.0 + iz / 10.0;
      CHECK(fbar1(d, y, z) == doctest::Approx(fhat_paper(y, z)).epsilon(1e-12));
    }
}

TEST_CASE("bilinear fhat reproduced exactly") {
  const LocalPolynomialDriver d = fit_from_driver(
      [](double y, double z) { return y * z; }, 0.0, 1.0, 0.0, 1.0, 7, 3);
  RngStream rng(5, 0);
  for (int rep = 0; rep < 300; ++rep) {
    const double y = rng.uniform();
    const double z = rng.uniform();
    CHECK(fbar1(d, y, z) == doctest::Approx(y * z).epsilon(1e-12));
  }
}

TEST_CASE("mesh doubling shrinks the fit error about four-fold") {
  const LocalPolynomialDriver c =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 10, 10);
  const LocalPolynomialDriver f =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 20, 20);
  const double ec = dense_fit_error(c, 400);
  const double ef = dense_fit_error(f, 400);
  CHECK(ef < ec);
  const double ratio = ec / ef;
  // the |yz| kink caps sup-norm convergence below second order; observed 2.07
  CHECK(ratio > 1.9);
}

TEST_CASE("outside the fit box evaluation equals the projected boundary point") {
  const LocalPolynomialDriver d =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 8, 8);
  CHECK(fbar1(d, 2.5, 0.3) == doctest::Approx(fbar1(d, 1.0, 0.3)));
  CHECK(fbar1(d, -1.0, 0.3) == doctest::Approx(fbar1(d, 0.0, 0.3)));
  CHECK(fbar1(d, 0.4, 7.0) == doctest::Approx(fbar1(d, 0.4, 1.0)));
  CHECK(fbar1(d, 3.0, -3.0) == doctest::Approx(fbar1(d, 1.0, -1.0)));
}

TEST_CASE("kernels are a nonnegative partition of unity") {
  const LocalPolynomialDriver d =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 6, 9);
  RngStream rng(17, 0);
  std::vector<KernelWeight> kw;
  for (int rep = 0; rep < 10000; ++rep) {
    const double y = -0.5 + 2.0 * rng.uniform();  // includes out-of-box priors
    const double z = -2.0 + 4.0 * rng.uniform();
    d.kernel_weights(y, Vec::scalar(z), kw);
    CHECK(kw.size() <= 4);
    double sum = 0;
    for (const KernelWeight& k : kw) {
      CHECK(k.w > 0.0);
      CHECK(k.w <= 1.0 + 1e-12);
      sum += k.w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("on kernel-one cells the evaluation is the plain cell polynomial") {
  const LocalPolynomialDriver d =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 5, 4);
  RngStream rng(23, 0);
  const double dy = 1.0 / 5.0, dz = 2.0 / 4.0;
  for (int iy = 0; iy < 5; ++iy)
    for (int iz = 0; iz < 4; ++iz) {
      // prior at the cell center: phi_j = 1 there
      const double yc = dy * (iy + 0.5);
      const double zc = -1.0 + dz * (iz + 0.5);
      const int j = iy + 5 * iz;
      for (int rep = 0; rep < 5; ++rep) {
        const double y = 3.0 * (rng.uniform() - 0.5);
        const double z = 3.0 * (rng.uniform() - 0.5);
        const double direct = d.coeff[j * 4 + 0] + d.coeff[j * 4 + 1] * y +
                              d.coeff[j * 4 + 2] * z + d.coeff[j * 4 + 3] * y * z;
        CHECK(d.eval_f_circ(0.0, Vec::scalar(0.0), y, Vec::scalar(z), yc,
                            Vec::scalar(zc)) ==
              doctest::Approx(direct).epsilon(1e-12));
      }
    }
}

TEST_CASE("sup_f_circ dominates a dense empirical supremum") {
  const LocalPolynomialDriver d =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 20, 10);
  double emp = 0;
  RngStream rng(31, 0);
  for (int rep = 0; rep < 20000; ++rep) {
    const double y = -1.0 + 2.0 * rng.uniform();
    const double z = -1.0 + 2.0 * rng.uniform();
    const double yp = -1.0 + 2.0 * rng.uniform();
    const double zp = -1.0 + 2.0 * rng.uniform();
    emp = std::max(emp, std::abs(d.eval_f_circ(0.0, Vec::scalar(0.0), y,
                                               Vec::scalar(z), yp,
                                               Vec::scalar(zp))));
  }
  CHECK(sup_f_circ(d, 1.0) >= emp);
}

TEST_CASE("eval_f_bar Lipschitz bound from the mesh coefficients") {
  const int ny = 10, nz = 8;
  const LocalPolynomialDriver d =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, ny, nz);
  // Df_bar = sum w_j DP_j + sum Dw_j (P_j - f_bar); bound the first term by
  // the max cell-polynomial slope and the second via kernel Lipschitz times
  // the max spread between kernel-adjacent cell polynomials over the box.
  auto cell_poly = [&](int j, double y, double z) {
    return d.coeff[j * 4 + 0] + d.coeff[j * 4 + 1] * y + d.coeff[j * 4 + 2] * z +
           d.coeff[j * 4 + 3] * y * z;
  };
  double slope = 0, spread = 0;
  for (int j = 0; j < d.j_count; ++j) {
    slope = std::max(slope, std::abs(d.coeff[j * 4 + 1]) +
                                std::abs(d.coeff[j * 4 + 3]) * 1.0);
    slope = std::max(slope, std::abs(d.coeff[j * 4 + 2]) +
                                std::abs(d.coeff[j * 4 + 3]) * 1.0);
    for (int k = 0; k < d.j_count; ++k) {
      const int jy = j % ny, jz = j / ny, ky = k % ny, kz = k / ny;
      if (std::abs(jy - ky) > 1 || std::abs(jz - kz) > 1) continue;
      for (double y : {0.0, 1.0})
        for (double z : {-1.0, 1.0})
          spread = std::max(spread,
                            std::abs(cell_poly(j, y, z) - cell_poly(k, y, z)));
    }
  }
  const double bound = slope + 2.0 * d.kernel_lip * spread;

  const double eps = 1e-5;
  RngStream rng(37, 0);
  for (int rep = 0; rep < 3000; ++rep) {
    const double y = eps + (1.0 - 2.0 * eps) * rng.uniform();
    const double z = -1.0 + eps + (2.0 - 2.0 * eps) * rng.uniform();
    const double gy = (fbar1(d, y + eps, z) - fbar1(d, y - eps, z)) / (2 * eps);
    const double gz = (fbar1(d, y, z + eps) - fbar1(d, y, z - eps)) / (2 * eps);
    CHECK(std::abs(gy) <= bound * (1.0 + 1e-6));
    CHECK(std::abs(gz) <= bound * (1.0 + 1e-6));
  }
}

TEST_CASE("offspring probabilities") {
  SUBCASE("proportional to per-index sup and normalized") {
    const LocalPolynomialDriver d =
        fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 4, 4);
    const std::vector<double> p = d.offspring_probs();
    REQUIRE(p.size() == 4);
    double total = 0, s0 = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      total += p[i];
      s0 += d.index_sup(int(i));
    }
    CHECK(total == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(p[i] == doctest::Approx(d.index_sup(int(i)) / s0));
  }
  SUBCASE("zero driver falls back to uniform") {
    const LocalPolynomialDriver d =
        make_monomial_driver(1, DriverIndex{{2, 0, 0, 0}}, 0.0);
    CHECK(d.offspring_probs() == std::vector<double>{1.0});
  }
}

TEST_CASE("x-only source folds into the zero index") {
  LocalPolynomialDriver d = make_monomial_driver(1, DriverIndex{{0, 0, 0, 0}}, 0.1);
  d.source = [](double t, const Vec& x) { return t + x[0]; };
  d.source_sup = 2.0;
  CHECK(d.coeff_at(0, 0, 0.5, Vec::scalar(0.25)) == doctest::Approx(0.85));
  CHECK(d.index_sup(0) == doctest::Approx(2.1));
  CHECK(d.eval_f_circ(0.5, Vec::scalar(0.25), 9.0, Vec::scalar(9.0), 0.0,
                      Vec::scalar(0.0)) == doctest::Approx(0.85));
}

TEST_CASE("driver serialization round-trip") {
  const LocalPolynomialDriver d =
      fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 6, 5);
  const std::string path = "/tmp/test_driver_roundtrip.json";
  save_driver(d, path);
  const LocalPolynomialDriver r = load_driver(path);
  REQUIRE(r.coeff.size() == d.coeff.size());
  for (std::size_t i = 0; i < d.coeff.size(); ++i)
    CHECK(r.coeff[i] == d.coeff[i]);
  RngStream rng(41, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const double y = rng.uniform();
    const double z = -1.0 + 2.0 * rng.uniform();
    CHECK(fbar1(r, y, z) == fbar1(d, y, z));
  }
  std::remove(path.c_str());
}

TEST_CASE("fit rejects bad inputs") {
  CHECK_THROWS_AS(fit_from_driver(fhat_paper, 0.0, 1.0, -1.0, 1.0, 0, 4),
                  FitError);
  CHECK_THROWS_AS(fit_from_driver(fhat_paper, 1.0, 0.0, -1.0, 1.0, 4, 4),
                  FitError);
  CHECK_THROWS_AS(
      fit_from_driver([](double, double) { return std::nan(""); }, 0.0, 1.0,
                      -1.0, 1.0, 2, 2),
      FitError);
}
