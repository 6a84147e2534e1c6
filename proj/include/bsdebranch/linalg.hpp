#pragma once

#include <cmath>
#include <stdexcept>

namespace bsde {

// Stack-only vectors and matrices for the diffusion state space.
// Dimension is a runtime value capped at kMaxDim; no heap traffic on the
// sampling hot path.
inline constexpr int kMaxDim = 3;

struct Vec {
  int n = 0;
  double v[kMaxDim] = {0.0, 0.0, 0.0};

  Vec() = default;
  explicit Vec(int dim) : n(dim) {}
  static Vec zero(int dim) { return Vec(dim); }
  static Vec scalar(double x) {
    Vec r(1);
    r.v[0] = x;
    return r;
  }

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) v[i] -= o.v[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) v[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < n; ++i) s += v[i] * v[i];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }
  bool finite() const {
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(v[i])) return false;
    return true;
  }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.n; ++i) s += a.v[i] * b.v[i];
  return s;
}

struct Mat {
  int n = 0;
  double m[kMaxDim * kMaxDim] = {};

  Mat() = default;
  explicit Mat(int dim) : n(dim) {}
  static Mat zero(int dim) { return Mat(dim); }
  static Mat identity(int dim) {
    Mat r(dim);
    for (int i = 0; i < dim; ++i) r.at(i, i) = 1.0;
    return r;
  }
  static Mat scalar(double x) {
    Mat r(1);
    r.m[0] = x;
    return r;
  }

  double& at(int i, int j) { return m[i * kMaxDim + j]; }
  double at(int i, int j) const { return m[i * kMaxDim + j]; }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) at(i, j) += o.at(i, j);
    return *this;
  }
  Mat& operator*=(double s) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) at(i, j) *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }

  Vec col(int j) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) r[i] = at(i, j);
    return r;
  }

  double frobenius() const {
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += at(i, j) * at(i, j);
    return std::sqrt(s);
  }
  bool finite() const {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!std::isfinite(at(i, j))) return false;
    return true;
  }
};

inline Vec matvec(const Mat& a, const Vec& x) {
  Vec r(a.n);
  for (int i = 0; i < a.n; ++i) {
    double s = 0;
    for (int j = 0; j < a.n; ++j) s += a.at(i, j) * x.v[j];
    r[i] = s;
  }
  return r;
}

// a^T x
inline Vec matTvec(const Mat& a, const Vec& x) {
  Vec r(a.n);
  for (int j = 0; j < a.n; ++j) {
    double s = 0;
    for (int i = 0; i < a.n; ++i) s += a.at(i, j) * x.v[i];
    r[j] = s;
  }
  return r;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat r(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      double s = 0;
      for (int k = 0; k < a.n; ++k) s += a.at(i, k) * b.at(k, j);
      r.at(i, j) = s;
    }
  return r;
}

inline double det(const Mat& a) {
  switch (a.n) {
    case 1:
      return a.at(0, 0);
    case 2:
      return a.at(0, 0) * a.at(1, 1) - a.at(0, 1) * a.at(1, 0);
    case 3:
      return a.at(0, 0) * (a.at(1, 1) * a.at(2, 2) - a.at(1, 2) * a.at(2, 1)) -
             a.at(0, 1) * (a.at(1, 0) * a.at(2, 2) - a.at(1, 2) * a.at(2, 0)) +
             a.at(0, 2) * (a.at(1, 0) * a.at(2, 1) - a.at(1, 1) * a.at(2, 0));
    default:
      throw std::invalid_argument("det: dimension must be 1..3");
  }
}

// Direct adjugate inverse, d <= 3.  Throws std::runtime_error on a
// (near-)singular input; callers that need the ellipticity check should go
// through sde.hpp instead.
inline Mat inverse(const Mat& a) {
  const double d = det(a);
  if (!std::isfinite(d) || std::abs(d) < 1e-300)
    throw std::runtime_error("inverse: singular matrix");
  Mat r(a.n);
  switch (a.n) {
    case 1:
      r.m[0] = 1.0 / d;
      break;
    case 2:
      r.at(0, 0) = a.at(1, 1) / d;
      r.at(0, 1) = -a.at(0, 1) / d;
      r.at(1, 0) = -a.at(1, 0) / d;
      r.at(1, 1) = a.at(0, 0) / d;
      break;
    case 3:
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
          const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
          // cofactor transpose
          r.at(j, i) =
              (a.at(i1, j1) * a.at(i2, j2) - a.at(i1, j2) * a.at(i2, j1)) / d;
        }
      break;
  }
  return r;
}

// Largest eigenvalue of the symmetric part of a, d <= 3.
inline double max_eig_sym(const Mat& a) {
  if (a.n == 1) return a.at(0, 0);
  Mat s(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) s.at(i, j) = 0.5 * (a.at(i, j) + a.at(j, i));
  // shift so the target eigenvalue is the largest in magnitude
  double shift = 0;
  for (int i = 0; i < a.n; ++i) {
    double row = 0;
    for (int j = 0; j < a.n; ++j) row += std::abs(s.at(i, j));
    shift = std::max(shift, row);
  }
  Mat b = s;
  for (int i = 0; i < a.n; ++i) b.at(i, i) += shift;
  Vec x(a.n);
  for (int i = 0; i < a.n; ++i) x[i] = 1.0 / std::sqrt(double(a.n));
  double lam = 0;
  for (int it = 0; it < 500; ++it) {
    Vec y = matvec(b, x);
    const double nrm = y.norm();
    if (nrm == 0) return -shift;
    y *= 1.0 / nrm;
    lam = dot(y, matvec(b, y));
    x = y;
  }
  return lam - shift;
}

}  // namespace bsde
