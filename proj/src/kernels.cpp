#include "nlrd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace nlrd {

namespace {

constexpr double kTailMass = 1e-12;
constexpr int kDoiSubsamples = 32;

void require_separation(const Kernel& kernel) {
  if (!kernel.is_separation_kernel()) throw std::invalid_argument("not a separation kernel");
}

double squared_norm(const Point& w, int dimension) {
  return dimension == 1 ? w[0] * w[0] : w[0] * w[0] + w[1] * w[1];
}

// Cell average of the Doi indicator over the cell centred at offset o.
double doi_cell_fraction(const Offset& o, int dimension, double h, double eps) {
  const double eps2 = eps * eps;
  int inside = 0;
  if (dimension == 1) {
    for (int m = 0; m < kDoiSubsamples; ++m) {
      const double x = (o[0] - 0.5 + (m + 0.5) / kDoiSubsamples) * h;
      if (x * x <= eps2) ++inside;
    }
    return static_cast<double>(inside) / kDoiSubsamples;
  }
  for (int m0 = 0; m0 < kDoiSubsamples; ++m0) {
    const double x = (o[0] - 0.5 + (m0 + 0.5) / kDoiSubsamples) * h;
    for (int m1 = 0; m1 < kDoiSubsamples; ++m1) {
      const double y = (o[1] - 0.5 + (m1 + 0.5) / kDoiSubsamples) * h;
      if (x * x + y * y <= eps2) ++inside;
    }
  }
  return static_cast<double>(inside) / (kDoiSubsamples * kDoiSubsamples);
}

// 1d periodised Gaussian profile exp(-(o h)^2 / 2 eps^2) summed over images
// reaching up to `reach` cells.
double gaussian_profile(int o, int n, int reach, double h, double eps) {
  double sum = 0.0;
  const int images = reach / n + 1;
  for (int m = -images; m <= images; ++m) {
    const long shifted = static_cast<long>(o) + static_cast<long>(m) * n;
    if (std::labs(shifted) > reach) continue;
    const double x = shifted * h;
    sum += std::exp(-x * x / (2.0 * eps * eps));
  }
  return sum;
}

void finalize(DiscretizedKernel& dk, double target_mass) {
  double raw = 0.0;
  for (double w : dk.weights) raw += w;
  raw *= dk.grid.cell_volume();
  const double scale = target_mass / raw;
  for (double& w : dk.weights) w *= scale;
  dk.support_radius = 0;
  for (const auto& o : dk.offsets)
    dk.support_radius = std::max({dk.support_radius, std::abs(o[0]), std::abs(o[1])});
}

}  // namespace

double ball_volume(int dimension, double radius) {
  return dimension == 1 ? 2.0 * radius : std::numbers::pi * radius * radius;
}

double kernel_eval(const Kernel& kernel, const Point& w) {
  require_separation(kernel);
  const int d = kernel.dimension;
  const double r2 = squared_norm(w, d);
  const double eps = kernel.width;
  if (kernel.kind == KernelKind::Doi)
    return r2 <= eps * eps ? kernel.rate / ball_volume(d, eps) : 0.0;
  const double norm = std::pow(2.0 * std::numbers::pi * eps * eps, -0.5 * d);
  return kernel.rate * norm * std::exp(-r2 / (2.0 * eps * eps));
}

double kernel_eval(const Kernel& kernel, double w) { return kernel_eval(kernel, Point{w, 0.0}); }

double kernel_mass(const Kernel& kernel) {
  require_separation(kernel);
  return kernel.rate;
}

double kernel_second_moment(const Kernel& kernel) {
  require_separation(kernel);
  const double d = kernel.dimension;
  const double eps2 = kernel.width * kernel.width;
  if (kernel.kind == KernelKind::Doi) return eps2 * d / (d + 2.0);
  return d * eps2;
}

double gaussian_truncation_radius(double width, int dimension) {
  // Box truncation: omitted mass <= d * erfc(t / sqrt 2).
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (dimension * std::erfc(mid / std::numbers::sqrt2) > kTailMass)
      lo = mid;
    else
      hi = mid;
  }
  return hi * width;
}

double DiscretizedKernel::mass() const {
  double sum = 0.0;
  for (double w : weights) sum += w;
  return sum * grid.cell_volume();
}

double DiscretizedKernel::second_moment() const {
  const double h = grid.spacing();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double r2 = (static_cast<double>(offsets[i][0]) * offsets[i][0] +
                       static_cast<double>(offsets[i][1]) * offsets[i][1]) *
                      h * h;
    num += weights[i] * r2;
    den += weights[i];
  }
  return num / den;
}

DiscretizedKernel discretize_kernel(const Kernel& kernel, const PeriodicGrid& grid) {
  require_separation(kernel);
  if (kernel.dimension != grid.dimension)
    throw std::invalid_argument("kernel and grid dimensions differ");
  const int d = grid.dimension;
  const int n = grid.points_per_axis;
  const double h = grid.spacing();
  const double eps = kernel.width;

  int reach = 0;  // cells that may carry weight, per axis
  if (kernel.kind == KernelKind::Doi) {
    if (eps > 0.5 * grid.length) throw std::invalid_argument("kernel wider than domain");
    reach = static_cast<int>(std::ceil(eps / h + 0.5));
  } else {
    reach = static_cast<int>(std::ceil(gaussian_truncation_radius(eps, d) / h));
  }
  const bool periodised = reach >= n / 2;
  const int span = periodised ? n / 2 : reach;

  // Raw (unperiodised) value at an integer offset.
  auto raw_value = [&](const Offset& o) -> double {
    if (kernel.kind == KernelKind::Doi) return doi_cell_fraction(o, d, h, eps);
    return 0.0;  // Gaussian handled separably below
  };

  std::vector<double> profile;  // Gaussian per-axis profile indexed by o + span
  if (kernel.kind == KernelKind::Gaussian) {
    profile.resize(2 * span + 1);
    for (int o = -span; o <= span; ++o)
      profile[o + span] = periodised ? gaussian_profile(o, n, reach, h, eps)
                                     : std::exp(-(o * h) * (o * h) / (2.0 * eps * eps));
  }

  auto value = [&](const Offset& o) -> double {
    if (kernel.kind == KernelKind::Gaussian) {
      double v = profile[o[0] + span];
      if (d == 2) v *= profile[o[1] + span];
      return v;
    }
    if (!periodised) return raw_value(o);
    double sum = 0.0;
    for (int m0 = -1; m0 <= 1; ++m0) {
      const Offset s0{o[0] + m0 * n, o[1]};
      if (d == 1) {
        if (std::abs(s0[0]) <= reach) sum += raw_value(s0);
        continue;
      }
      for (int m1 = -1; m1 <= 1; ++m1) {
        const Offset s{s0[0], o[1] + m1 * n};
        if (std::abs(s[0]) <= reach && std::abs(s[1]) <= reach) sum += raw_value(s);
      }
    }
    return sum;
  };
  // Offsets at +-N/2 alias the same point; each copy carries half the weight.
  auto alias_factor = [&](int o) { return periodised && std::abs(o) == n / 2 ? 0.5 : 1.0; };

  DiscretizedKernel dk;
  dk.grid = grid;
  const int span1 = d == 2 ? span : 0;
  for (int o0 = -span; o0 <= span; ++o0) {
    for (int o1 = -span1; o1 <= span1; ++o1) {
      const Offset o{o0, o1};
      double w = value(o) * alias_factor(o0);
      if (d == 2) w *= alias_factor(o1);
      if (w > 0.0) {
        dk.offsets.push_back(o);
        dk.weights.push_back(w);
      }
    }
  }
  if (dk.offsets.empty()) {
    // Ball smaller than the sub-sample spacing: all mass in the centre cell.
    dk.offsets.push_back({0, 0});
    dk.weights.push_back(1.0);
  }
  finalize(dk, kernel.rate);
  return dk;
}

DiscretizedKernel shifted_stencil(const DiscretizedKernel& kernel, double beta) {
  std::map<Offset, double> acc;
  const int d = kernel.grid.dimension;
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    std::array<int, 2> base{0, 0};
    std::array<double, 2> frac{0.0, 0.0};
    for (int a = 0; a < d; ++a) {
      const double pos = beta * kernel.offsets[i][a];
      const double fl = std::floor(pos);
      base[a] = static_cast<int>(fl);
      frac[a] = pos - fl;
    }
    const double w = kernel.weights[i];
    if (d == 1) {
      acc[{base[0], 0}] += w * (1.0 - frac[0]);
      if (frac[0] > 0.0) acc[{base[0] + 1, 0}] += w * frac[0];
      continue;
    }
    for (int c0 = 0; c0 <= 1; ++c0) {
      const double w0 = c0 ? frac[0] : 1.0 - frac[0];
      if (w0 == 0.0) continue;
      for (int c1 = 0; c1 <= 1; ++c1) {
        const double w1 = c1 ? frac[1] : 1.0 - frac[1];
        if (w1 == 0.0) continue;
        acc[{base[0] + c0, base[1] + c1}] += w * w0 * w1;
      }
    }
  }
  DiscretizedKernel out;
  out.grid = kernel.grid;
  for (const auto& [o, w] : acc) {
    out.offsets.push_back(o);
    out.weights.push_back(w);
    out.support_radius = std::max({out.support_radius, std::abs(o[0]), std::abs(o[1])});
  }
  return out;
}

DiscretizedKernel combine_stencils(
    const std::vector<std::pair<double, DiscretizedKernel>>& parts) {
  if (parts.empty()) throw std::invalid_argument("no stencils to combine");
  std::map<Offset, double> acc;
  for (const auto& [scale, dk] : parts) {
    if (!(dk.grid == parts.front().second.grid))
      throw std::invalid_argument("stencils live on different grids");
    for (std::size_t i = 0; i < dk.size(); ++i) acc[dk.offsets[i]] += scale * dk.weights[i];
  }
  DiscretizedKernel out;
  out.grid = parts.front().second.grid;
  for (const auto& [o, w] : acc) {
    if (w == 0.0) continue;
    out.offsets.push_back(o);
    out.weights.push_back(w);
    out.support_radius = std::max({out.support_radius, std::abs(o[0]), std::abs(o[1])});
  }
  return out;
}

Dissociation detailed_balance_unbinding(const Kernel& binding_kernel,
                                        const ConvexCombination& binding_placement, double k2) {
  require_separation(binding_kernel);
  if (!(k2 > 0.0)) throw std::invalid_argument("dissociation rate must be positive");
  Dissociation out;
  out.separation = binding_kernel;
  out.separation.rate = 1.0;  // K1 / k1
  out.centers = binding_placement.centers;
  return out;
}

double mollifier_residual(const Kernel& kernel, const PeriodicGrid& grid, const TestFunction& f,
                          const TestFunction& g, double alpha) {
  Kernel unit = kernel;
  unit.rate = 1.0;
  const DiscretizedKernel dk = discretize_kernel(unit, grid);
  const double h = grid.spacing();
  const double hd = grid.cell_volume();
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto idx = grid.multi_index(p);
    const Point x{idx[0] * h, idx[1] * h};
    double acc = 0.0;
    for (std::size_t i = 0; i < dk.size(); ++i) {
      const Point u{dk.offsets[i][0] * h, dk.offsets[i][1] * h};
      const Point shifted{x[0] - alpha * u[0], x[1] - alpha * u[1]};
      const Point partner{x[0] - u[0], x[1] - u[1]};
      acc += dk.weights[i] * f(shifted) * g(partner);
    }
    worst = std::max(worst, std::abs(acc * hd - f(x) * g(x)));
  }
  return worst;
}

}  // namespace nlrd
