#include "vantage/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace vantage {

namespace {

void check_vantage(const OccupancyMap& map, const Vantage& x) {
  const auto& g = map.geometry();
  if (!g.contains(x.node)) throw Error(ErrorCode::invalid_vantage, "vantage outside the grid");
  if (!map.is_free(x.node)) throw Error(ErrorCode::invalid_vantage, "vantage is not in free space");
}

// Minimum of the interpolated level set along [x, y], sampled at <= dx/2.
double segment_minimum(const ScalarField& phi, const Node& x, const Node& y) {
  const std::array<double, 3> d{static_cast<double>(y[0] - x[0]), static_cast<double>(y[1] - x[1]),
                                static_cast<double>(y[2] - x[2])};
  const double len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
  double lo = phi.at(y);
  for (int s = 0; s < steps; ++s) {
    const Point q{x[0] + d[0] * s / steps, x[1] + d[1] * s / steps, x[2] + d[2] * s / steps};
    lo = std::min(lo, sample_index_space(phi, q));
  }
  return lo;
}

void ray_march(const OccupancyMap& map, const Node& x, std::vector<double>& out) {
  const auto& g = map.geometry();
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = segment_minimum(map.phi(), x, g.node(i));
}

void sweep(const OccupancyMap& map, const Node& x, std::vector<double>& out) {
  const auto& phi = map.phi().values();
  const auto& g = map.geometry();
  const auto& e = g.extents();
  const std::array<std::ptrdiff_t, 3> stride{static_cast<std::ptrdiff_t>(e[1]) * e[2], e[2], 1};
  const std::size_t origin = g.index(x);
  out[origin] = phi[origin];

  // Each orthant is swept outward from x. Every dependency of a node lies in
  // the box spanned by x and that node, one plane closer along the dominant
  // axis, so it has been finalised before the node is reached.
  const int zsigns = e[2] == 1 ? 1 : 2;
  for (int sx = 0; sx < 2; ++sx) {
    for (int sy = 0; sy < 2; ++sy) {
      for (int sz = 0; sz < zsigns; ++sz) {
        const std::array<int, 3> dir{sx ? -1 : 1, sy ? -1 : 1, sz ? -1 : 1};
        const std::array<int, 3> stop{sx ? -1 : e[0], sy ? -1 : e[1], sz ? -1 : e[2]};
        for (int i = x[0]; i != stop[0]; i += dir[0]) {
          for (int j = x[1]; j != stop[1]; j += dir[1]) {
            for (int k = x[2]; k != stop[2]; k += dir[2]) {
              const std::array<int, 3> v{x[0] - i, x[1] - j, x[2] - k};
              const std::array<int, 3> av{std::abs(v[0]), std::abs(v[1]), std::abs(v[2])};
              int a = 0;
              if (av[1] > av[a]) a = 1;
              if (av[2] > av[a]) a = 2;
              const int m = av[static_cast<std::size_t>(a)];
              if (m == 0) continue;
              const std::size_t here = static_cast<std::size_t>(i * stride[0] + j * stride[1] + k * stride[2]);
              // Base node of the interpolation stencil on the neighbouring plane.
              std::array<int, 3> base{i, j, k};
              std::array<double, 3> frac{0.0, 0.0, 0.0};
              const std::array<int, 3> y{i, j, k};
              for (std::size_t b = 0; b < 3; ++b) {
                if (static_cast<int>(b) == a) {
                  base[b] = y[b] + (v[b] > 0 ? 1 : -1);
                  continue;
                }
                if (v[b] == 0) continue;
                const double c = y[b] + static_cast<double>(v[b]) / m;
                const double f = std::floor(c);
                base[b] = static_cast<int>(f);
                frac[b] = c - f;
              }
              double acc = 0.0;
              double lo = std::numeric_limits<double>::max();
              double hi = std::numeric_limits<double>::lowest();
              const std::ptrdiff_t b0 = base[0] * stride[0] + base[1] * stride[1] + base[2] * stride[2];
              const int span1 = frac[1] > 0.0 ? 2 : 1;
              const int span2 = frac[2] > 0.0 ? 2 : 1;
              const int span0 = frac[0] > 0.0 ? 2 : 1;
              for (int di = 0; di < span0; ++di) {
                const double wi = di ? frac[0] : 1.0 - frac[0];
                for (int dj = 0; dj < span1; ++dj) {
                  const double wj = dj ? frac[1] : 1.0 - frac[1];
                  for (int dk = 0; dk < span2; ++dk) {
                    const double wk = dk ? frac[2] : 1.0 - frac[2];
                    const double u = out[static_cast<std::size_t>(b0 + di * stride[0] + dj * stride[1] + dk * stride[2])];
                    lo = std::min(lo, u);
                    hi = std::max(hi, u);
                    acc += wi * wj * wk * u;
                  }
                }
              }
              if (phi[here] > 0.0 && lo <= 0.0 && hi > 0.0) {
                // Stencil straddles a shadow edge: interpolation would smear
                // the edge, so evaluate the segment directly.
                out[here] = segment_minimum(map.phi(), x, y);
              } else {
                out[here] = std::min(phi[here], acc);
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

void visibility_values(const OccupancyMap& map, const Vantage& x, VisibilityMethod method, std::vector<double>& out) {
  check_vantage(map, x);
  out.resize(map.geometry().size());
  if (method == VisibilityMethod::ray_march) {
    ray_march(map, x.node, out);
  } else {
    sweep(map, x.node, out);
  }
}

ScalarField visibility_field(const OccupancyMap& map, const Vantage& x, VisibilityMethod method) {
  std::vector<double> out;
  visibility_values(map, x, method, out);
  return ScalarField(map.geometry(), std::move(out));
}

ExplorationState ExplorationState::empty(const GridGeometry& geometry) {
  return ExplorationState(ScalarField(geometry, std::numeric_limits<double>::lowest()), ScalarField(geometry, 0.0),
                          {});
}

std::size_t ExplorationState::seen_count() const {
  return static_cast<std::size_t>(
      std::count_if(psi_cum_.values().begin(), psi_cum_.values().end(), [](double v) { return v > 0.0; }));
}

ExplorationState ExplorationState::with_boundary(ScalarField boundary) const {
  if (!(boundary.geometry() == geometry())) {
    throw Error(ErrorCode::invalid_argument, "boundary geometry does not match state");
  }
  ExplorationState next = *this;
  next.boundary_ = std::move(boundary);
  return next;
}

ExplorationState accumulate(const ExplorationState& state, const Vantage& x, const ScalarField& psi_new) {
  if (!(psi_new.geometry() == state.geometry())) {
    throw Error(ErrorCode::invalid_argument, "visibility field geometry does not match state");
  }
  std::vector<double> psi(psi_new.size());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = std::max(state.psi_cum()[i], psi_new[i]);
  auto vantages = state.vantages();
  vantages.push_back(x);
  return ExplorationState(ScalarField(state.geometry(), std::move(psi)), ScalarField(state.geometry(), 0.0),
                          std::move(vantages));
}

ScalarField shadow_boundary(const ScalarField& psi_cum, const OccupancyMap& map, double eps) {
  if (!(psi_cum.geometry() == map.geometry())) {
    throw Error(ErrorCode::invalid_argument, "cumulative visibility geometry does not match map");
  }
  if (!std::isfinite(eps) || eps <= 0.0) throw Error(ErrorCode::invalid_argument, "eps must be positive");
  std::vector<double> b(psi_cum.size());
  const auto& phi = map.phi();
  for (std::size_t i = 0; i < b.size(); ++i) {
    b[i] = smeared_delta(psi_cum[i], eps) * (1.0 - heaviside(smeared_delta(phi[i], eps)));
  }
  return ScalarField(psi_cum.geometry(), std::move(b));
}

ExplorationState observe(const OccupancyMap& map, const ExplorationState& state, const Vantage& x, double eps,
                         VisibilityMethod method) {
  auto next = accumulate(state, x, visibility_field(map, x, method));
  auto b = shadow_boundary(next.psi_cum(), map, eps);
  return next.with_boundary(std::move(b));
}

std::size_t unseen_count(const ScalarField& psi_cum, const OccupancyMap& map) {
  if (!(psi_cum.geometry() == map.geometry())) {
    throw Error(ErrorCode::invalid_argument, "cumulative visibility geometry does not match map");
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < psi_cum.size(); ++i) {
    if (map.is_free(i) && psi_cum[i] <= 0.0) ++n;
  }
  return n;
}

double residual(const ScalarField& psi_cum, const OccupancyMap& map) {
  return static_cast<double>(unseen_count(psi_cum, map)) / static_cast<double>(map.free_count());
}

}  // namespace vantage
