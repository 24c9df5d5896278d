#pragma once

#include <array>
#include <functional>
#include <vector>

#include "nlrd/grid.hpp"
#include "nlrd/network.hpp"

namespace nlrd {

using Point = std::array<double, 2>;  // second component ignored in 1d
using Offset = std::array<int, 2>;

/// Pointwise value of a separation kernel at displacement w.
/// Throws std::invalid_argument("not a separation kernel") for Constant.
double kernel_eval(const Kernel& kernel, const Point& w);
double kernel_eval(const Kernel& kernel, double w);

/// Total mass of a separation kernel (equals kernel.rate).
double kernel_mass(const Kernel& kernel);

/// Normalised second moment  (1/k) * integral K(w) |w|^2 dw.
double kernel_second_moment(const Kernel& kernel);

/// Volume of the d-ball of radius r.
double ball_volume(int dimension, double radius);

/// A kernel realised on grid offsets: (K * f)(x_i) = sum_o w(o) f(x_{i-o}) h^d.
struct DiscretizedKernel {
  PeriodicGrid grid;
  std::vector<Offset> offsets;
  std::vector<double> weights;
  int support_radius = 0;

  /// sum of weights times h^d
  double mass() const;
  /// (1/mass) sum w(o) |o h|^2 h^d
  double second_moment() const;
  std::size_t size() const { return offsets.size(); }
};

/// Samples a separation kernel on grid offsets. Doi weights are cell averages
/// of the indicator (32 sub-samples per axis); Gaussian weights are point
/// values truncated where the omitted tail mass falls below 1e-12 and summed
/// over periodic images when the truncation radius reaches half the domain.
/// All weights are then scaled by one factor so that mass() equals the rate.
DiscretizedKernel discretize_kernel(const Kernel& kernel, const PeriodicGrid& grid);

/// Truncation radius (length units) used for a Gaussian of width eps in d dims.
double gaussian_truncation_radius(double width, int dimension);

/// Distributes every offset s of `kernel` to beta * s, splitting off-grid
/// points onto neighbouring offsets with linear (1d) / bilinear (2d) weights.
/// The result realises f(x - beta s) under the convolution convention.
DiscretizedKernel shifted_stencil(const DiscretizedKernel& kernel, double beta);

/// Weighted sum of stencils on the same grid (offsets merged).
DiscretizedKernel combine_stencils(const std::vector<std::pair<double, DiscretizedKernel>>& parts);

/// Dissociation placement satisfying K_d K1(x - y) m1(z|x,y) = K2 m2(x,y|z)
/// with K_d = k2 / k1: separation density K1 / k1 and the binding centres.
Dissociation detailed_balance_unbinding(const Kernel& binding_kernel,
                                        const ConvexCombination& binding_placement, double k2);

using TestFunction = std::function<double(const Point&)>;

/// sup_x | sum_u K(u) f(x - alpha u) g(x - u) h^d - f(x) g(x) | over grid
/// points, with the kernel rescaled to unit mass.
double mollifier_residual(const Kernel& kernel, const PeriodicGrid& grid, const TestFunction& f,
                          const TestFunction& g, double alpha);

}  // namespace nlrd
