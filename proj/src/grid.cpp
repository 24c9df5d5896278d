#include "nlrd/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace nlrd {

double PeriodicGrid::cell_volume() const {
  const double h = spacing();
  return dimension == 1 ? h : h * h;
}

PeriodicGrid make_grid(int dimension, int points_per_axis, double length) {
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("grid dimension must be 1 or 2");
  if (points_per_axis <= 0 || (points_per_axis & (points_per_axis - 1)) != 0)
    throw std::invalid_argument("grid points per axis must be a power of two");
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("grid length must be positive");
  return PeriodicGrid{dimension, points_per_axis, length};
}

double field_integral(const Field& field, const PeriodicGrid& grid) {
  double sum = 0.0;
  for (double v : field) sum += v;
  return sum * grid.cell_volume();
}

double sup_norm(const Field& field) {
  double m = 0.0;
  for (double v : field) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace nlrd
