#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "bsdebranch/linalg.hpp"

namespace bsde {

// Multi-index (l0, l1..lq): power of y and of each directional gradient term.
struct DriverIndex {
  std::array<int, 1 + kMaxDim> l = {0, 0, 0, 0};
  int norm1() const { return l[0] + l[1] + l[2] + l[3]; }
};

// Kernel evaluation result: localization cell and its weight.
struct KernelWeight {
  int j;
  double w;
};

// Local polynomial driver
//   f(x, y, z, y', z') = sum_j sum_l c_{j,l}(t,x) y^{l0} prod_q (b_q(x).z)^{lq}
//                        * phi_j(y', z')
// The z slot is the sigma-normalized gradient (z^T sigma^{-1} as a column
// vector); for the spline-fitted 1D construction this is exactly the plain
// space derivative, which is also what the branching marks estimate.
struct LocalPolynomialDriver {
  int dim = 1;         // dimension of x and z
  int q_count = 0;     // number of gradient directions
  int degree_cap = 0;  // L.
  std::vector<DriverIndex> index_set;
  int j_count = 1;
  // constant part of c_{j,l}: coeff[j * index_set.size() + l]
  std::vector<double> coeff;
  // optional additive x-only term, folded into the all-zero index channel
  std::function<double(double, const Vec&)> source;
  double source_sup = 0;
  std::vector<std::function<Vec(const Vec&)>> basis;  // b_q, q = 1..q_count
  double c_sup = 0;       // bound C_L over (j, l, t, x), incl. source
  double kernel_lip = 0;  // L_phi

  // kernels: fitted tensor hats over the (y, z) fit box, or user functions
  bool fitted = false;
  double y_lo = 0, y_hi = 0, z_lo = 0, z_hi = 0;
  int n_y = 0, n_z = 0;  // mesh (cell) counts of the fit
  std::vector<std::function<double(double, const Vec&)>> kernels;  // manual
  bool partition_of_unity = true;

  // c_{j,l}(t,x) with the source folded into the all-zero index
  double coeff_at(int j, int l_idx, double t, const Vec& x) const;
  // sup over (j,t,x) of |c_{j,l}| for one index
  double index_sup(int l_idx) const;

  // nonzero kernel weights at a prior point (at most 4 in the fitted case)
  void kernel_weights(double y_prior, const Vec& z_prior,
                      std::vector<KernelWeight>& out) const;

  double eval_f_circ(double t, const Vec& x, double y, const Vec& z,
                     double y_prior, const Vec& z_prior) const;
  double eval_f_bar(double t, const Vec& x, double y, const Vec& z) const;

  // default offspring probabilities p_l = ||c_l||_inf / ||c||_{1,inf};
  // uniform when the driver is identically zero
  std::vector<double> offspring_probs() const;
};

// Bilinear spline fit of fhat(y,z) on [y_lo,y_hi]x[z_lo,z_hi] with
// n_y x n_z cells; basis 1, y, z, yz per cell, hat kernels on cell centers.
LocalPolynomialDriver fit_from_driver(
    const std::function<double(double, double)>& fhat, double y_lo, double y_hi,
    double z_lo, double z_hi, int n_y, int n_z);

// Certified upper bound of |f| over {|y| <= M_cap, ||z^T sigma^-1|| <= M_cap}
// (primes included).
double sup_f_circ(const LocalPolynomialDriver& drv, double M_cap);

// single-cell driver with one multi-index; phi == 1 (test/registry helper)
LocalPolynomialDriver make_monomial_driver(int dim, const DriverIndex& idx,
                                           double c);

void save_driver(const LocalPolynomialDriver& drv, const std::string& path);
LocalPolynomialDriver load_driver(const std::string& path);

}  // namespace bsde
