#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vantage/error.hpp"

namespace vantage {

/// Multi-index of a grid node. Unused trailing axes of a 2D grid are 0.
using Node = std::array<int, 3>;
/// World-space point; unused trailing coordinates of a 2D grid are 0.
using Point = std::array<double, 3>;

/// Uniform node-centred grid in two or three dimensions.
///
/// Internally every grid is stored as 3D with `extent(2) == 1` for 2D grids,
/// so loops can be written once. Node `n` sits at `origin + n * dx`.
class GridGeometry {
 public:
  GridGeometry() = default;
  /// Throws invalid_argument unless dim is 2 or 3, every extent is >= 4 and
  /// dx is finite and positive.
  GridGeometry(std::span<const int> shape, double dx, std::span<const double> origin = {});

  static GridGeometry square(int n, double dx = 1.0) {
    const std::array<int, 2> s{n, n};
    return GridGeometry(s, dx);
  }
  static GridGeometry cube(int n, double dx = 1.0) {
    const std::array<int, 3> s{n, n, n};
    return GridGeometry(s, dx);
  }

  int dim() const noexcept { return dim_; }
  int extent(int axis) const noexcept { return extent_[static_cast<std::size_t>(axis)]; }
  const std::array<int, 3>& extents() const noexcept { return extent_; }
  /// The `dim()` leading extents.
  std::vector<int> shape() const;
  double dx() const noexcept { return dx_; }
  const Point& origin() const noexcept { return origin_; }

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(extent_[0]) * static_cast<std::size_t>(extent_[1]) *
           static_cast<std::size_t>(extent_[2]);
  }
  /// Volume represented by one node, dx^dim.
  double cell_volume() const noexcept;
  /// Euclidean length of the box diagonal in world units.
  double diameter() const noexcept;

  bool contains(const Node& n) const noexcept {
    return n[0] >= 0 && n[1] >= 0 && n[2] >= 0 && n[0] < extent_[0] && n[1] < extent_[1] &&
           n[2] < extent_[2];
  }
  std::size_t index(const Node& n) const noexcept {
    return (static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(extent_[1]) +
            static_cast<std::size_t>(n[1])) *
               static_cast<std::size_t>(extent_[2]) +
           static_cast<std::size_t>(n[2]);
  }
  Node node(std::size_t index) const noexcept;
  Point world(const Node& n) const noexcept;
  /// World point to fractional node coordinates.
  Point to_index_space(const Point& p) const noexcept;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;

 private:
  int dim_ = 2;
  std::array<int, 3> extent_{4, 4, 1};
  double dx_ = 1.0;
  Point origin_{0.0, 0.0, 0.0};
};

/// Real values on every node of a grid, row-major (axis 0 slowest).
class ScalarField {
 public:
  ScalarField() = default;
  /// Constant field.
  ScalarField(const GridGeometry& geometry, double fill);
  /// Throws invalid_argument on a length mismatch or a non-finite value.
  ScalarField(const GridGeometry& geometry, std::vector<double> values);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double at(const Node& n) const noexcept { return values_[geometry_.index(n)]; }
  double min() const;
  double max() const;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

/// Binary occupancy: 1 = free, 0 = obstacle, one byte per node in grid order.
using Mask = std::vector<std::uint8_t>;

/// Environment level set with the convention free space = {phi > 0}.
class OccupancyMap {
 public:
  /// Throws degenerate_map when no node has phi > 0.
  explicit OccupancyMap(ScalarField phi);

  const ScalarField& phi() const noexcept { return phi_; }
  const GridGeometry& geometry() const noexcept { return phi_.geometry(); }
  bool is_free(std::size_t i) const noexcept { return phi_[i] > 0.0; }
  bool is_free(const Node& n) const noexcept { return phi_.at(n) > 0.0; }
  /// Number of free nodes, |Omega| in node units.
  std::size_t free_count() const noexcept { return free_count_; }
  double free_volume() const noexcept { return static_cast<double>(free_count_) * geometry().cell_volume(); }
  Mask free_mask() const;

 private:
  ScalarField phi_;
  std::size_t free_count_ = 0;
};

/// Cosine-squared approximation of the Dirac delta with support [-eps/2, eps/2].
double smeared_delta(double t, double eps);

/// 1 for t > 0, else 0 (H(0) = 0 keeps {H(phi) = 1} equal to {phi > 0}).
double heaviside(double t);

/// Multilinear interpolation of `field` at world point `p`.
/// Throws out_of_domain when p lies outside the grid's bounding box.
double sample(const ScalarField& field, const Point& p);

/// Same as sample() but in fractional node coordinates and without bounds
/// checking beyond clamping; hot path for ray evaluation.
double sample_index_space(const ScalarField& field, const Point& q) noexcept;

/// Builds the signed-distance level set of a free/obstacle mask using an exact
/// separable Euclidean distance transform: phi > 0 on free nodes, phi < 0 on
/// obstacle nodes and |phi| is the world distance to the nearest node of the
/// opposite kind. An all-free mask yields phi = 10 * diameter everywhere; an
/// all-obstacle mask throws degenerate_map.
OccupancyMap signed_distance(std::span<const std::uint8_t> free_mask, const GridGeometry& geometry);

/// Squared Euclidean distance transform (node units) of a binary feature map:
/// result[i] = min over feature nodes f of |i - f|^2, or +inf without features.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> feature,
                                               const GridGeometry& geometry);

}  // namespace vantage
