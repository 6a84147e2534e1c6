#include "bsdebranch/sde.hpp"

#include <cmath>
#include <string>

namespace bsde {

Mat invert_sigma(const SdeCoefficients& coef, const Mat& sig) {
  const double d = det(sig);
  const double floor = std::pow(coef.a0, coef.dim);
  if (!std::isfinite(d) || std::abs(d) < floor * (1.0 - 1e-9))
    throw EllipticityError("sigma determinant " + std::to_string(d) +
                           " below ellipticity floor a0^d = " +
                           std::to_string(floor));
  return inverse(sig);
}

namespace {

// One Euler step of size h starting at (x, tangent); dw is returned so the
// caller can record it.
inline void euler_step(const SdeCoefficients& coef, Vec& x, Mat* tangent,
                       Vec* wacc, double h, RngStream& rng, Vec* dw_out) {
  const Vec mu = coef.mu(x);
  const Mat sig = coef.sigma(x);
  if (!mu.finite() || !sig.finite())
    throw CoefficientError("non-finite drift/diffusion evaluation");

  Vec dw(coef.dim);
  const double sq = std::sqrt(h);
  for (int i = 0; i < coef.dim; ++i) dw[i] = sq * rng.normal();

  if (tangent != nullptr) {
    if (wacc != nullptr) {
      // contribution [sigma^-1 grad X]^T dW at the left endpoint
      const Mat isig = invert_sigma(coef, sig);
      *wacc += matTvec(matmul(isig, *tangent), dw);
    }
    const Mat dmu = coef.d_mu(x);
    Mat next = *tangent;
    Mat incr = matmul(dmu, *tangent);
    incr *= h;
    next += incr;
    for (int i = 0; i < coef.dim; ++i) {
      Mat dsi = matmul(coef.d_sigma(x, i), *tangent);
      dsi *= dw[i];
      next += dsi;
    }
    if (!next.finite()) throw CoefficientError("non-finite tangent process");
    *tangent = next;
  }

  for (int i = 0; i < coef.dim; ++i) {
    double s = x[i] + mu[i] * h;
    for (int j = 0; j < coef.dim; ++j) s += sig.at(i, j) * dw[j];
    x[i] = s;
  }
  if (dw_out != nullptr) *dw_out = dw;
}

}  // namespace

PathSample simulate_path(const SdeCoefficients& coef, const Vec& x0, double t0,
                         double t1, double dt, RngStream& rng) {
  if (!(t0 < t1)) throw std::invalid_argument("simulate_path: need t0 < t1");
  if (!(dt > 0)) throw std::invalid_argument("simulate_path: need dt > 0");

  PathSample p;
  p.times.push_back(t0);
  p.x.push_back(x0);
  p.grad_x.push_back(Mat::identity(coef.dim));

  Vec x = x0;
  Mat tangent = Mat::identity(coef.dim);
  double t = t0;
  while (t < t1 - 1e-14) {
    const double h = std::min(dt, t1 - t);
    Vec dw;
    euler_step(coef, x, &tangent, nullptr, h, rng, &dw);
    t = std::min(t + dt, t1);
    p.times.push_back(t);
    p.x.push_back(x);
    p.grad_x.push_back(tangent);
    p.dw.push_back(dw);
  }
  if (!x.finite()) throw CoefficientError("non-finite path state");
  return p;
}

namespace {

int locate_time(const PathSample& path, double t) {
  for (std::size_t k = 0; k < path.times.size(); ++k)
    if (std::abs(path.times[k] - t) < 1e-9) return int(k);
  return -1;
}

}  // namespace

Vec malliavin_weight(const SdeCoefficients& coef, const PathSample& path,
                     double t, double s) {
  if (!(t < s)) throw std::invalid_argument("malliavin_weight: need t < s");
  const int kt = locate_time(path, t);
  const int ks = locate_time(path, s);
  if (kt < 0 || ks < 0)
    throw std::invalid_argument("malliavin_weight: t, s must be path grid times");

  Vec acc(coef.dim);
  for (int k = kt; k < ks; ++k) {
    const Mat isig = invert_sigma(coef, coef.sigma(path.x[k]));
    acc += matTvec(matmul(isig, path.grad_x[k]), path.dw[k]);
  }
  acc *= 1.0 / (s - t);
  // N_s^t carries a grad X_t^{-1} on the right; identity when anchored at the
  // path start.
  return matTvec(inverse(path.grad_x[kt]), acc);
}

void advance_euler(const SdeCoefficients& coef, Vec& x, double t0, double t1,
                   double dt, RngStream& rng, Mat* tangent, Vec* wacc) {
  double t = t0;
  while (t < t1 - 1e-14) {
    const double h = std::min(dt, t1 - t);
    euler_step(coef, x, tangent, wacc, h, rng, nullptr);
    t += dt;
  }
  if (!x.finite()) throw CoefficientError("non-finite path state");
}

void spot_check_coefficients(const SdeCoefficients& coef, double lo, double hi,
                             int n_points, RngStream& rng) {
  for (int p = 0; p < n_points; ++p) {
    Vec x(coef.dim);
    for (int i = 0; i < coef.dim; ++i)
      x[i] = lo + (hi - lo) * rng.uniform();

    const Mat sig = coef.sigma(x);
    // smallest eigenvalue of sigma sigma^T via the largest of its negation
    Mat a = matmul(sig, [&] {
      Mat st(coef.dim);
      for (int i = 0; i < coef.dim; ++i)
        for (int j = 0; j < coef.dim; ++j) st.at(i, j) = sig.at(j, i);
      return st;
    }());
    Mat neg = a;
    neg *= -1.0;
    const double min_eig = -max_eig_sym(neg);
    if (min_eig < coef.a0 * coef.a0 * (1.0 - 1e-9))
      throw EllipticityError("sigma sigma^T eigenvalue below a0^2 at sample point");

    const double tol = 1e-9;
    if (coef.mu(x).norm() > coef.mu_sup + tol)
      throw CoefficientError("mu exceeds declared sup norm");
    if (sig.frobenius() > coef.sigma_sup * std::sqrt(double(coef.dim)) + tol)
      throw CoefficientError("sigma exceeds declared sup norm");
    if (coef.d_mu(x).frobenius() > coef.d_mu_sup * std::sqrt(double(coef.dim)) + tol)
      throw CoefficientError("d_mu exceeds declared sup norm");
    for (int i = 0; i < coef.dim; ++i)
      if (coef.d_sigma(x, i).frobenius() >
          coef.d_sigma_sup * std::sqrt(double(coef.dim)) + tol)
        throw CoefficientError("d_sigma exceeds declared sup norm");
  }
}

}  // namespace bsde
