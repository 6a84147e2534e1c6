#include "bsdebranch/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bsdebranch/errors.hpp"

namespace bsde {

GridFunction GridFunction::make(int dim, const Vec& lo, const Vec& hi,
                                const int* nodes, Interp interp) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("GridFunction: dim must be 1..3");
  GridFunction g;
  g.dim = dim;
  g.lo = lo;
  g.interp = interp;
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) {
    if (nodes[a] < 2) throw std::invalid_argument("GridFunction: need >= 2 nodes per axis");
    if (!(hi[a] > lo[a])) throw std::invalid_argument("GridFunction: degenerate box");
    g.nn[a] = nodes[a];
    g.dx[a] = (hi[a] - lo[a]) / double(nodes[a] - 1);
    total *= std::size_t(nodes[a]);
  }
  g.values.assign(total, 0.0);
  return g;
}

std::size_t GridFunction::size() const { return values.size(); }

std::size_t GridFunction::flat(const int* idx) const {
  std::size_t f = 0;
  for (int a = dim - 1; a >= 0; --a) f = f * std::size_t(nn[a]) + std::size_t(idx[a]);
  return f;
}

Vec GridFunction::node(std::size_t f) const {
  Vec x(dim);
  for (int a = 0; a < dim; ++a) {
    x[a] = lo[a] + dx[a] * double(f % std::size_t(nn[a]));
    f /= std::size_t(nn[a]);
  }
  return x;
}

void GridFunction::fill(const std::function<double(const Vec&)>& fn) {
  for (std::size_t f = 0; f < values.size(); ++f) values[f] = fn(node(f));
}

namespace {

// quadratic Lagrange on three equispaced values, clamped to their range
inline double quad3(double v0, double v1, double v2, double s) {
  // s in stencil units, node offsets 0,1,2
  const double l0 = 0.5 * (s - 1.0) * (s - 2.0);
  const double l1 = -s * (s - 2.0);
  const double l2 = 0.5 * s * (s - 1.0);
  double r = l0 * v0 + l1 * v1 + l2 * v2;
  const double mn = std::min(v0, std::min(v1, v2));
  const double mx = std::max(v0, std::max(v1, v2));
  return std::min(mx, std::max(mn, r));
}

}  // namespace

double GridFunction::interpolate(const Vec& x) const {
  // per-axis stencil base and local coordinate, query clamped to the box
  int base[kMaxDim] = {};
  double s[kMaxDim] = {};
  int width[kMaxDim] = {};
  for (int a = 0; a < dim; ++a) {
    const double hi = lo[a] + dx[a] * double(nn[a] - 1);
    double xa = std::min(hi, std::max(lo[a], x[a]));
    double u = (xa - lo[a]) / dx[a];
    if (interp == Interp::quadratic && nn[a] >= 3) {
      int b = int(std::lround(u)) - 1;
      b = std::max(0, std::min(nn[a] - 3, b));
      base[a] = b;
      s[a] = u - double(b);
      width[a] = 3;
    } else {
      int b = int(std::floor(u));
      b = std::max(0, std::min(nn[a] - 2, b));
      base[a] = b;
      s[a] = u - double(b);
      width[a] = 2;
    }
  }
  // gather the tensor stencil and collapse one axis at a time
  double buf[27];
  int count = 1;
  for (int a = 0; a < dim; ++a) count *= width[a];
  for (int c = 0; c < count; ++c) {
    int idx[kMaxDim] = {};
    int r = c;
    for (int a = 0; a < dim; ++a) {
      idx[a] = base[a] + r % width[a];
      r /= width[a];
    }
    buf[c] = values[flat(idx)];
  }
  int stride = 1;
  for (int a = 0; a < dim; ++a) {
    const int outer = count / (stride * width[a]);
    double out[27];
    for (int o = 0; o < outer; ++o)
      for (int i = 0; i < stride; ++i) {
        const int base_c = o * stride * width[a] + i;
        if (width[a] == 3) {
          out[o * stride + i] = quad3(buf[base_c], buf[base_c + stride],
                                      buf[base_c + 2 * stride], s[a]);
        } else {
          out[o * stride + i] =
              (1.0 - s[a]) * buf[base_c] + s[a] * buf[base_c + stride];
        }
      }
    count = outer * stride;
    std::copy(out, out + count, buf);
  }
  return buf[0];
}

double GridFunction::max_abs() const {
  double m = 0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double sup_distance(const GridFunction& a, const GridFunction& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("sup_distance: layout mismatch");
  double m = 0;
  for (std::size_t f = 0; f < a.values.size(); ++f)
    m = std::max(m, std::abs(a.values[f] - b.values[f]));
  return m;
}

GridFunction facelift(const GridFunction& g, double M) {
  if (!(M > 0)) throw std::invalid_argument("facelift: M must be positive");
  GridFunction r = g;
  // separable L1 sup-convolution: per axis, forward then backward pass
  for (int a = 0; a < r.dim; ++a) {
    const double drop = M * r.dx[a];
    std::size_t stride = 1;
    for (int b = 0; b < a; ++b) stride *= std::size_t(r.nn[b]);
    const std::size_t n = std::size_t(r.nn[a]);
    const std::size_t lines = r.values.size() / n;
    for (std::size_t li = 0; li < lines; ++li) {
      // start index of this line: interleave the lower and upper strides
      const std::size_t lowpart = li % stride;
      const std::size_t highpart = li / stride;
      const std::size_t start = lowpart + highpart * stride * n;
      double* v = r.values.data();
      for (std::size_t k = 1; k < n; ++k) {
        const std::size_t c = start + k * stride;
        v[c] = std::max(v[c], v[c - stride] - drop);
      }
      for (std::size_t k = n - 1; k-- > 0;) {
        const std::size_t c = start + k * stride;
        v[c] = std::max(v[c], v[c + stride] - drop);
      }
    }
  }
  for (double& v : r.values) v = std::min(M, std::max(-M, v));
  return r;
}

std::vector<GridFunction> fd_gradient(const GridFunction& g) {
  std::vector<GridFunction> out;
  for (int a = 0; a < g.dim; ++a) {
    if (g.nn[a] < 3)
      throw std::invalid_argument("fd_gradient: need >= 3 nodes per axis");
    GridFunction d = g;
    std::size_t stride = 1;
    for (int b = 0; b < a; ++b) stride *= std::size_t(g.nn[b]);
    const std::size_t n = std::size_t(g.nn[a]);
    const std::size_t lines = g.values.size() / n;
    for (std::size_t li = 0; li < lines; ++li) {
      const std::size_t start = li % stride + (li / stride) * stride * n;
      const double h = g.dx[a];
      auto src = [&](std::size_t k) { return g.values[start + k * stride]; };
      for (std::size_t k = 0; k < n; ++k) {
        double dv;
        if (k == 0)
          dv = (src(1) - src(0)) / h;
        else if (k == n - 1)
          dv = (src(n - 1) - src(n - 2)) / h;
        else
          dv = (src(k + 1) - src(k - 1)) / (2.0 * h);
        d.values[start + k * stride] = dv;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

void write_grid_csv(const GridFunction& g, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw ConfigError("cannot open " + path + " for writing");
  for (int a = 0; a < g.dim; ++a) std::fprintf(f, "x%d,", a);
  std::fprintf(f, "value\n");
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const Vec x = g.node(i);
    for (int a = 0; a < g.dim; ++a) std::fprintf(f, "%.12g,", x[a]);
    std::fprintf(f, "%.12g\n", g.values[i]);
  }
  std::fclose(f);
}

}  // namespace bsde
