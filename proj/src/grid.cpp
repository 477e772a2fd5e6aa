#include "vantage/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace vantage {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::out_of_domain: return "out-of-domain";
    case ErrorCode::degenerate_map: return "degenerate-map";
    case ErrorCode::invalid_vantage: return "invalid-vantage";
    case ErrorCode::no_candidate: return "no-candidate";
    case ErrorCode::estimator_error: return "estimator-error";
    case ErrorCode::format_error: return "format-error";
    case ErrorCode::invalid_polygon: return "invalid-polygon";
    case ErrorCode::generation_failure: return "generation-failure";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

GridGeometry::GridGeometry(std::span<const int> shape, double dx, std::span<const double> origin) {
  if (shape.size() != 2 && shape.size() != 3) {
    throw Error(ErrorCode::invalid_argument, "grid dimension must be 2 or 3, got " + std::to_string(shape.size()));
  }
  if (!std::isfinite(dx) || dx <= 0.0) {
    throw Error(ErrorCode::invalid_argument, "grid spacing must be finite and positive");
  }
  if (!origin.empty() && origin.size() != shape.size()) {
    throw Error(ErrorCode::invalid_argument, "origin dimension does not match shape");
  }
  dim_ = static_cast<int>(shape.size());
  extent_ = {1, 1, 1};
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (shape[a] < 4) {
      throw Error(ErrorCode::invalid_argument, "every grid extent must be >= 4");
    }
    extent_[a] = shape[a];
  }
  for (std::size_t a = 0; a < origin.size(); ++a) {
    if (!std::isfinite(origin[a])) throw Error(ErrorCode::invalid_argument, "origin must be finite");
    origin_[a] = origin[a];
  }
  dx_ = dx;
}

std::vector<int> GridGeometry::shape() const {
  return {extent_.begin(), extent_.begin() + dim_};
}

double GridGeometry::cell_volume() const noexcept {
  return dim_ == 2 ? dx_ * dx_ : dx_ * dx_ * dx_;
}

double GridGeometry::diameter() const noexcept {
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double len = (extent_[static_cast<std::size_t>(a)] - 1) * dx_;
    s += len * len;
  }
  return std::sqrt(s);
}

Node GridGeometry::node(std::size_t index) const noexcept {
  const auto e1 = static_cast<std::size_t>(extent_[1]);
  const auto e2 = static_cast<std::size_t>(extent_[2]);
  return {static_cast<int>(index / (e1 * e2)), static_cast<int>((index / e2) % e1), static_cast<int>(index % e2)};
}

Point GridGeometry::world(const Node& n) const noexcept {
  Point p{};
  for (std::size_t a = 0; a < 3; ++a) {
    p[a] = static_cast<int>(a) < dim_ ? origin_[a] + n[a] * dx_ : 0.0;
  }
  return p;
}

Point GridGeometry::to_index_space(const Point& p) const noexcept {
  Point q{};
  for (std::size_t a = 0; a < 3; ++a) {
    q[a] = static_cast<int>(a) < dim_ ? (p[a] - origin_[a]) / dx_ : 0.0;
  }
  return q;
}

ScalarField::ScalarField(const GridGeometry& geometry, double fill)
    : geometry_(geometry), values_(geometry.size(), fill) {
  if (!std::isfinite(fill)) throw Error(ErrorCode::invalid_argument, "field values must be finite");
}

ScalarField::ScalarField(const GridGeometry& geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values)) {
  if (values_.size() != geometry_.size()) {
    throw Error(ErrorCode::invalid_argument, "field length " + std::to_string(values_.size()) +
                                                 " does not match grid size " + std::to_string(geometry_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "field values must be finite");
  }
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

OccupancyMap::OccupancyMap(ScalarField phi) : phi_(std::move(phi)) {
  free_count_ = static_cast<std::size_t>(
      std::count_if(phi_.values().begin(), phi_.values().end(), [](double v) { return v > 0.0; }));
  if (free_count_ == 0) throw Error(ErrorCode::degenerate_map, "map has no free space");
}

Mask OccupancyMap::free_mask() const {
  Mask m(phi_.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = phi_[i] > 0.0 ? 1 : 0;
  return m;
}

double smeared_delta(double t, double eps) {
  if (!std::isfinite(t) || !std::isfinite(eps) || eps <= 0.0) {
    throw Error(ErrorCode::invalid_argument, "smeared_delta needs finite t and eps > 0");
  }
  if (std::abs(t) >= 0.5 * eps) return 0.0;
  const double c = std::cos(std::numbers::pi * t / eps);
  return 2.0 / eps * c * c;
}

double heaviside(double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::invalid_argument, "heaviside needs finite input");
  return t > 0.0 ? 1.0 : 0.0;
}

double sample_index_space(const ScalarField& field, const Point& q) noexcept {
  const auto& g = field.geometry();
  std::array<int, 3> base{};
  std::array<double, 3> frac{};
  std::array<int, 3> span{};
  for (std::size_t a = 0; a < 3; ++a) {
    const int n = g.extent(static_cast<int>(a));
    if (n == 1) {
      base[a] = 0;
      frac[a] = 0.0;
      span[a] = 1;
      continue;
    }
    const double c = std::clamp(q[a], 0.0, static_cast<double>(n - 1));
    int i = static_cast<int>(std::floor(c));
    if (i > n - 2) i = n - 2;
    base[a] = i;
    frac[a] = c - i;
    span[a] = frac[a] == 0.0 ? 1 : 2;
  }
  double acc = 0.0;
  for (int di = 0; di < span[0]; ++di) {
    const double wi = di ? frac[0] : 1.0 - frac[0];
    for (int dj = 0; dj < span[1]; ++dj) {
      const double wj = dj ? frac[1] : 1.0 - frac[1];
      for (int dk = 0; dk < span[2]; ++dk) {
        const double wk = dk ? frac[2] : 1.0 - frac[2];
        acc += wi * wj * wk * field.at({base[0] + di, base[1] + dj, base[2] + dk});
      }
    }
  }
  return acc;
}

double sample(const ScalarField& field, const Point& p) {
  const auto& g = field.geometry();
  const Point q = g.to_index_space(p);
  for (int a = 0; a < g.dim(); ++a) {
    const double hi = g.extent(a) - 1;
    const double tol = 1e-9;
    if (!std::isfinite(q[static_cast<std::size_t>(a)]) || q[static_cast<std::size_t>(a)] < -tol ||
        q[static_cast<std::size_t>(a)] > hi + tol) {
      throw Error(ErrorCode::out_of_domain, "sample point outside grid bounding box");
    }
  }
  return sample_index_space(field, q);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one line.
// `f` holds squared distances (inf = no feature); result written to `d`.
void envelope_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[static_cast<std::size_t>(q)] == kInf) continue;
    const double fq = f[static_cast<std::size_t>(q)] + static_cast<double>(q) * q;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    for (;;) {
      const int p = v[static_cast<std::size_t>(k)];
      s = (fq - (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[static_cast<std::size_t>(q)] = static_cast<double>(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> feature, const GridGeometry& geometry) {
  if (feature.size() != geometry.size()) {
    throw Error(ErrorCode::invalid_argument, "mask length does not match grid size");
  }
  std::vector<double> dist(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) dist[i] = feature[i] ? 0.0 : kInf;

  const auto& e = geometry.extents();
  const std::array<std::size_t, 3> stride{static_cast<std::size_t>(e[1]) * static_cast<std::size_t>(e[2]),
                                          static_cast<std::size_t>(e[2]), 1};
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const int n = e[axis];
    if (n == 1) continue;
    std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    // Enumerate every line parallel to `axis` by its start node.
    for (std::size_t start = 0; start < dist.size(); ++start) {
      const Node s = geometry.node(start);
      if (s[axis] != 0) continue;
      for (int q = 0; q < n; ++q) f[static_cast<std::size_t>(q)] = dist[start + static_cast<std::size_t>(q) * stride[axis]];
      envelope_1d(f, d, v, z);
      for (int q = 0; q < n; ++q) dist[start + static_cast<std::size_t>(q) * stride[axis]] = d[static_cast<std::size_t>(q)];
    }
  }
  return dist;
}

OccupancyMap signed_distance(std::span<const std::uint8_t> free_mask, const GridGeometry& geometry) {
  if (free_mask.size() != geometry.size()) {
    throw Error(ErrorCode::invalid_argument, "mask length does not match grid size");
  }
  const auto free_nodes = static_cast<std::size_t>(std::count_if(free_mask.begin(), free_mask.end(),
                                                                 [](std::uint8_t m) { return m != 0; }));
  if (free_nodes == 0) throw Error(ErrorCode::degenerate_map, "mask has no free node");
  if (free_nodes == free_mask.size()) {
    return OccupancyMap(ScalarField(geometry, 10.0 * geometry.diameter()));
  }
  Mask obstacle(free_mask.size());
  Mask free(free_mask.size());
  for (std::size_t i = 0; i < free_mask.size(); ++i) {
    free[i] = free_mask[i] ? 1 : 0;
    obstacle[i] = free_mask[i] ? 0 : 1;
  }
  const auto to_obstacle = squared_distance_transform(obstacle, geometry);
  const auto to_free = squared_distance_transform(free, geometry);
  std::vector<double> phi(free_mask.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi[i] = free[i] ? std::sqrt(to_obstacle[i]) * geometry.dx() : -std::sqrt(to_free[i]) * geometry.dx();
  }
  return OccupancyMap(ScalarField(geometry, std::move(phi)));
}

}  // namespace vantage
