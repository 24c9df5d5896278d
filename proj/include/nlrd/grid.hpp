#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace nlrd {

/// Uniform periodic grid on [0, L)^d with collocation points x_i = i L / N.
/// Points are stored row-major: index = i0 * N + i1 in 2d.
struct PeriodicGrid {
  int dimension = 1;
  int points_per_axis = 0;
  double length = 0.0;

  double spacing() const { return length / points_per_axis; }
  std::size_t size() const {
    return dimension == 1 ? static_cast<std::size_t>(points_per_axis)
                          : static_cast<std::size_t>(points_per_axis) * points_per_axis;
  }
  /// h^d, the midpoint-rule cell volume.
  double cell_volume() const;
  double coordinate(int i) const { return i * spacing(); }
  int wrap(long i) const {
    const long n = points_per_axis;
    long r = i % n;
    return static_cast<int>(r < 0 ? r + n : r);
  }
  std::array<int, 2> multi_index(std::size_t flat) const {
    if (dimension == 1) return {static_cast<int>(flat), 0};
    return {static_cast<int>(flat / points_per_axis), static_cast<int>(flat % points_per_axis)};
  }
  std::size_t flat_index(int i0, int i1) const {
    return dimension == 1 ? static_cast<std::size_t>(wrap(i0))
                          : static_cast<std::size_t>(wrap(i0)) * points_per_axis + wrap(i1);
  }

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;
};

/// Throws std::invalid_argument unless d in {1,2}, N a power of two, L > 0.
PeriodicGrid make_grid(int dimension, int points_per_axis, double length);

using Field = std::vector<double>;

/// Per-species concentration fields on a grid at one time.
struct GridField {
  PeriodicGrid grid;
  std::vector<Field> species;
  double time = 0.0;
};

/// h^d * sum of values.
double field_integral(const Field& field, const PeriodicGrid& grid);

double sup_norm(const Field& field);

}  // namespace nlrd
