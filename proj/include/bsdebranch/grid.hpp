#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bsdebranch/linalg.hpp"

namespace bsde {

// Uniform tensor grid over an axis-aligned box with scalar node values.
// Interpolation is either linear or stencil-clamped quadratic Lagrange
// ("modified quadratic": the output never leaves the stencil's value range).
struct GridFunction {
  enum class Interp { quadratic, linear };

  int dim = 1;
  Vec lo;                      // lower corner
  double dx[kMaxDim] = {};     // step per axis
  int nn[kMaxDim] = {1, 1, 1}; // node count per axis
  Interp interp = Interp::quadratic;
  std::vector<double> values;  // flat index i0 + nn0*(i1 + nn1*i2)

  static GridFunction make(int dim, const Vec& lo, const Vec& hi,
                           const int* nodes, Interp interp = Interp::quadratic);

  std::size_t size() const;
  std::size_t flat(const int* idx) const;
  Vec node(std::size_t f) const;            // coordinates of flat index
  double& at(std::size_t f) { return values[f]; }
  double at(std::size_t f) const { return values[f]; }

  void fill(const std::function<double(const Vec&)>& fn);
  double interpolate(const Vec& x) const;   // out-of-box queries are clamped

  double max_abs() const;
};

// sup-norm distance on node values (grids must share a layout)
double sup_distance(const GridFunction& a, const GridFunction& b);

// Face-lift: discrete sup-convolution with delta(p) = M sum |p_i| (one
// forward/backward sweep per axis), then clamp to [-M, M].
GridFunction facelift(const GridFunction& g, double M);

// Central differences inside, one-sided at the boundary; one grid per axis.
std::vector<GridFunction> fd_gradient(const GridFunction& g);

// Nodes and values as CSV (x0[,x1[,x2]],value); deterministic formatting.
void write_grid_csv(const GridFunction& g, const std::string& path);

}  // namespace bsde
