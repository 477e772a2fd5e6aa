#pragma once

#include <cstddef>
#include <vector>

#include "vantage/grid.hpp"

namespace vantage {

/// A sensing location, restricted to grid nodes.
struct Vantage {
  Node node{0, 0, 0};

  Point world(const GridGeometry& g) const { return g.world(node); }
  friend bool operator==(const Vantage&, const Vantage&) = default;
};

/// How psi_x is evaluated.
///
/// `ray_march` is the reference: psi_x(y) is the minimum of the interpolated
/// level set over samples spaced at most dx/2 along the segment [x, y],
/// endpoints included. `sweep` is the upwind recursion
/// psi_x(y) = min(phi(y), psi_x(y')) where y' is the point where the segment
/// from y towards x crosses the neighbouring grid plane. Where the
/// interpolation stencil straddles the zero level (a shadow edge) the node
/// falls back to the reference segment minimum, so edges do not smear.
enum class VisibilityMethod { sweep, ray_march };

/// Visibility level set psi_x of vantage `x`; {psi_x > 0} is the set of nodes
/// seen from x. Throws invalid_vantage unless x is a free node.
ScalarField visibility_field(const OccupancyMap& map, const Vantage& x,
                             VisibilityMethod method = VisibilityMethod::sweep);

/// Writes psi_x into `out` (resized to the grid size). Same contract as
/// visibility_field() without wrapping the result in a ScalarField.
void visibility_values(const OccupancyMap& map, const Vantage& x, VisibilityMethod method, std::vector<double>& out);

/// Cumulative visibility Psi_k, shadow boundary b_k and the vantage history.
///
/// An empty state (no vantage yet, k() == -1) stores Psi = lowest finite
/// double so that the first accumulate() yields Psi_0 = psi_{x_0} exactly.
class ExplorationState {
 public:
  static ExplorationState empty(const GridGeometry& geometry);

  const ScalarField& psi_cum() const noexcept { return psi_cum_; }
  const ScalarField& boundary() const noexcept { return boundary_; }
  const std::vector<Vantage>& vantages() const noexcept { return vantages_; }
  /// Step index of the latest vantage; -1 for the empty state.
  int k() const noexcept { return static_cast<int>(vantages_.size()) - 1; }
  const GridGeometry& geometry() const noexcept { return psi_cum_.geometry(); }
  bool seen(std::size_t i) const noexcept { return psi_cum_[i] > 0.0; }
  /// |Omega_k| in node units.
  std::size_t seen_count() const;

  /// Replaces the stored shadow boundary; the geometry must match.
  ExplorationState with_boundary(ScalarField boundary) const;

 private:
  friend ExplorationState accumulate(const ExplorationState&, const Vantage&, const ScalarField&);
  ExplorationState(ScalarField psi, ScalarField boundary, std::vector<Vantage> vantages)
      : psi_cum_(std::move(psi)), boundary_(std::move(boundary)), vantages_(std::move(vantages)) {}

  ScalarField psi_cum_;
  ScalarField boundary_;
  std::vector<Vantage> vantages_;
};

/// Psi_k = max(Psi_{k-1}, psi_new) pointwise; appends `x` to the history.
/// The returned state carries a zero boundary field; see observe().
/// Throws invalid_argument on a geometry mismatch.
ExplorationState accumulate(const ExplorationState& state, const Vantage& x, const ScalarField& psi_new);

/// b_k = delta_eps(Psi_k) * (1 - H(delta_eps(phi))) at every node.
ScalarField shadow_boundary(const ScalarField& psi_cum, const OccupancyMap& map, double eps);

/// Default smearing width, three grid spacings.
inline double default_eps(const GridGeometry& g) { return 3.0 * g.dx(); }

/// One sensing step: visibility from x, accumulate, recompute b_k.
ExplorationState observe(const OccupancyMap& map, const ExplorationState& state, const Vantage& x, double eps,
                         VisibilityMethod method = VisibilityMethod::sweep);

/// Number of free nodes not yet seen, |Omega \ Omega_k| in node units.
std::size_t unseen_count(const ScalarField& psi_cum, const OccupancyMap& map);

/// Fraction of free space not yet seen, in [0, 1].
double residual(const ScalarField& psi_cum, const OccupancyMap& map);

}  // namespace vantage
