#include "bsdebranch/driver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bsdebranch/errors.hpp"
#include "json.hpp"

namespace bsde {

namespace {

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

inline double clampd(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

// hat weights on cell centers along one axis; at most two nonzero
inline void hat_axis(double v, double lo, double hi, int n_cells, int& i0,
                     double& w0, int& i1, double& w1) {
  const double dc = (hi - lo) / double(n_cells);
  const double first = lo + 0.5 * dc;
  double u = (clampd(v, lo, hi) - first) / dc;  // in cell-center units
  if (u <= 0) {
    i0 = 0; w0 = 1.0; i1 = -1; w1 = 0.0;
    return;
  }
  if (u >= double(n_cells - 1)) {
    i0 = n_cells - 1; w0 = 1.0; i1 = -1; w1 = 0.0;
    return;
  }
  const int k = int(std::floor(u));
  const double fr = u - double(k);
  i0 = k; w0 = 1.0 - fr;
  i1 = k + 1; w1 = fr;
}

}  // namespace

double LocalPolynomialDriver::coeff_at(int j, int l_idx, double t,
                                       const Vec& x) const {
  double c = coeff[std::size_t(j) * index_set.size() + std::size_t(l_idx)];
  if (source && index_set[l_idx].norm1() == 0) c += source(t, x);
  return c;
}

double LocalPolynomialDriver::index_sup(int l_idx) const {
  double m = 0;
  for (int j = 0; j < j_count; ++j)
    m = std::max(m, std::abs(coeff[std::size_t(j) * index_set.size() +
                                   std::size_t(l_idx)]));
  if (source && index_set[l_idx].norm1() == 0) m += source_sup;
  return m;
}

void LocalPolynomialDriver::kernel_weights(double y_prior, const Vec& z_prior,
                                           std::vector<KernelWeight>& out) const {
  out.clear();
  if (fitted) {
    int iy0, iy1, iz0, iz1;
    double wy0, wy1, wz0, wz1;
    hat_axis(y_prior, y_lo, y_hi, n_y, iy0, wy0, iy1, wy1);
    hat_axis(z_prior[0], z_lo, z_hi, n_z, iz0, wz0, iz1, wz1);
    const int iy[2] = {iy0, iy1};
    const double wy[2] = {wy0, wy1};
    const int iz[2] = {iz0, iz1};
    const double wz[2] = {wz0, wz1};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        if (iy[a] < 0 || iz[b] < 0) continue;
        const double w = wy[a] * wz[b];
        if (w > 0) out.push_back({iy[a] + n_y * iz[b], w});
      }
    return;
  }
  for (int j = 0; j < j_count; ++j) {
    const double w = kernels[std::size_t(j)](y_prior, z_prior);
    if (w != 0.0) out.push_back({j, w});
  }
}

double LocalPolynomialDriver::eval_f_circ(double t, const Vec& x, double y,
                                          const Vec& z, double y_prior,
                                          const Vec& z_prior) const {
  std::vector<KernelWeight> kw;
  kernel_weights(y_prior, z_prior, kw);
  if (kw.empty()) return 0.0;

  // directional projections once per call
  double proj[kMaxDim] = {};
  for (int q = 0; q < q_count; ++q) proj[q] = dot(basis[std::size_t(q)](x), z);

  double total = 0;
  for (const KernelWeight& k : kw) {
    double cell = 0;
    for (std::size_t li = 0; li < index_set.size(); ++li) {
      const DriverIndex& l = index_set[li];
      double mono = ipow(y, l.l[0]);
      for (int q = 0; q < q_count; ++q) mono *= ipow(proj[q], l.l[q + 1]);
      cell += coeff_at(k.j, int(li), t, x) * mono;
    }
    total += k.w * cell;
  }
  return total;
}

double LocalPolynomialDriver::eval_f_bar(double t, const Vec& x, double y,
                                         const Vec& z) const {
  double yc = y;
  Vec zc = z;
  if (fitted) {
    // evaluation outside the fit box uses the projected boundary point
    yc = clampd(y, y_lo, y_hi);
    zc[0] = clampd(z[0], z_lo, z_hi);
  }
  return eval_f_circ(t, x, yc, zc, yc, zc);
}

std::vector<double> LocalPolynomialDriver::offspring_probs() const {
  std::vector<double> p(index_set.size(), 0.0);
  double total = 0;
  for (std::size_t li = 0; li < index_set.size(); ++li) {
    p[li] = index_sup(int(li));
    total += p[li];
  }
  if (total <= 0) {
    const double u = 1.0 / double(index_set.size());
    for (double& v : p) v = u;
    return p;
  }
  for (double& v : p) v /= total;
  return p;
}

LocalPolynomialDriver fit_from_driver(
    const std::function<double(double, double)>& fhat, double y_lo, double y_hi,
    double z_lo, double z_hi, int n_y, int n_z) {
  if (n_y < 1 || n_z < 1) throw FitError("fit_from_driver: need >= 1 mesh per axis");
  if (!(y_hi > y_lo) || !(z_hi > z_lo)) throw FitError("fit_from_driver: degenerate box");

  LocalPolynomialDriver d;
  d.dim = 1;
  d.q_count = 1;
  d.degree_cap = 1;
  d.index_set = {DriverIndex{{0, 0, 0, 0}}, DriverIndex{{1, 0, 0, 0}},
                 DriverIndex{{0, 1, 0, 0}}, DriverIndex{{1, 1, 0, 0}}};
  d.j_count = n_y * n_z;
  d.coeff.assign(std::size_t(d.j_count) * 4, 0.0);
  d.basis = {[](const Vec&) { return Vec::scalar(1.0); }};  // b_1 = e_1
  d.fitted = true;
  d.y_lo = y_lo; d.y_hi = y_hi; d.z_lo = z_lo; d.z_hi = z_hi;
  d.n_y = n_y; d.n_z = n_z;

  const double dy = (y_hi - y_lo) / double(n_y);
  const double dz = (z_hi - z_lo) / double(n_z);
  std::vector<double> nodes(std::size_t(n_y + 1) * std::size_t(n_z + 1));
  for (int iz = 0; iz <= n_z; ++iz)
    for (int iy = 0; iy <= n_y; ++iy) {
      const double v = fhat(y_lo + dy * iy, z_lo + dz * iz);
      if (!std::isfinite(v)) throw FitError("fit_from_driver: non-finite driver value at node");
      nodes[std::size_t(iz) * (n_y + 1) + iy] = v;
    }

  for (int iz = 0; iz < n_z; ++iz)
    for (int iy = 0; iy < n_y; ++iy) {
      const double y0 = y_lo + dy * iy;
      const double z0 = z_lo + dz * iz;
      const double f00 = nodes[std::size_t(iz) * (n_y + 1) + iy];
      const double f10 = nodes[std::size_t(iz) * (n_y + 1) + iy + 1];
      const double f01 = nodes[std::size_t(iz + 1) * (n_y + 1) + iy];
      const double f11 = nodes[std::size_t(iz + 1) * (n_y + 1) + iy + 1];
      // expand the cell's bilinear interpolant on the monomials 1, y, z, yz
      const double ay = (f10 - f00) / dy;
      const double az = (f01 - f00) / dz;
      const double ayz = (f11 - f10 - f01 + f00) / (dy * dz);
      const std::size_t j = std::size_t(iy + n_y * iz) * 4;
      d.coeff[j + 0] = f00 - ay * y0 - az * z0 + ayz * y0 * z0;
      d.coeff[j + 1] = ay - ayz * z0;
      d.coeff[j + 2] = az - ayz * y0;
      d.coeff[j + 3] = ayz;
    }

  d.c_sup = 0;
  for (double c : d.coeff) d.c_sup = std::max(d.c_sup, std::abs(c));
  const double ly = double(n_y) / (y_hi - y_lo);
  const double lz = double(n_z) / (z_hi - z_lo);
  d.kernel_lip = std::sqrt(ly * ly + lz * lz);
  return d;
}

double sup_f_circ(const LocalPolynomialDriver& drv, double M_cap) {
  if (!(M_cap > 0)) throw std::invalid_argument("sup_f_circ: M_cap must be positive");
  // |y| <= M_cap and |b_q . z| <= ||b_q|| ||z^T sigma^-1||-scale <= M_cap in
  // the normalized z convention; kernels are in [0,1] and sum to one when
  // they form a partition of unity.
  double s = 0;
  for (std::size_t li = 0; li < drv.index_set.size(); ++li)
    s += drv.index_sup(int(li)) * ipow(M_cap, drv.index_set[li].norm1());
  if (!drv.partition_of_unity) s *= double(drv.j_count);
  return s;
}

LocalPolynomialDriver make_monomial_driver(int dim, const DriverIndex& idx,
                                           double c) {
  LocalPolynomialDriver d;
  d.dim = dim;
  d.q_count = 0;
  for (int q = 1; q <= kMaxDim; ++q)
    if (idx.l[std::size_t(q)] > 0) d.q_count = q;
  d.degree_cap = *std::max_element(idx.l.begin(), idx.l.end());
  d.index_set = {idx};
  d.j_count = 1;
  d.coeff = {c};
  for (int q = 0; q < d.q_count; ++q)
    d.basis.push_back([q, dim](const Vec&) {
      Vec e(dim);
      e[q] = 1.0;
      return e;
    });
  d.kernels = {[](double, const Vec&) { return 1.0; }};
  d.partition_of_unity = true;
  d.c_sup = std::abs(c);
  d.kernel_lip = 0;
  return d;
}

void save_driver(const LocalPolynomialDriver& drv, const std::string& path) {
  if (!drv.fitted)
    throw ConfigError("save_driver: only spline-fitted drivers are serializable");
  nlohmann::json j;
  j["n_y"] = drv.n_y;
  j["n_z"] = drv.n_z;
  j["y_lo"] = drv.y_lo; j["y_hi"] = drv.y_hi;
  j["z_lo"] = drv.z_lo; j["z_hi"] = drv.z_hi;
  j["coeff"] = drv.coeff;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

LocalPolynomialDriver load_driver(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  nlohmann::json j;
  in >> j;
  // rebuild the fitted structure, then overwrite the coefficients
  LocalPolynomialDriver d = fit_from_driver(
      [](double, double) { return 0.0; }, j.at("y_lo").get<double>(),
      j.at("y_hi").get<double>(), j.at("z_lo").get<double>(),
      j.at("z_hi").get<double>(), j.at("n_y").get<int>(), j.at("n_z").get<int>());
  const std::vector<double> c = j.at("coeff").get<std::vector<double>>();
  if (c.size() != d.coeff.size()) throw ConfigError("load_driver: coefficient count mismatch");
  d.coeff = c;
  d.c_sup = 0;
  for (double v : d.coeff) d.c_sup = std::max(d.c_sup, std::abs(v));
  return d;
}

}  // namespace bsde
