#pragma once

#include <cstdint>
#include <vector>

#include "vantage/grid.hpp"
#include "vantage/visibility.hpp"

namespace vantage {

/// Which nodes may host the next vantage point.
///
/// surveillance: any free node (the map is known).
/// exploration: only nodes already seen, {Psi_k > 0}.
enum class GainMode { surveillance, exploration };

/// Per-node gain (volume units, dx^d per node) with the candidate mask applied.
struct GainField {
  ScalarField values;
  Mask candidates;

  double max() const { return values.max(); }
  std::size_t candidate_count() const;
};

struct GainOptions {
  /// 0 = hardware concurrency.
  unsigned workers = 1;
  VisibilityMethod method = VisibilityMethod::sweep;
};

Mask candidate_mask(const OccupancyMap& map, const ExplorationState& state, GainMode mode);

/// Number of nodes seen from x that are not in Omega_k.
std::size_t exact_gain_count(const OccupancyMap& map, const ExplorationState& state, const Vantage& x,
                             VisibilityMethod method = VisibilityMethod::sweep);

/// Volume newly uncovered by a vantage at x: dx^d * |{psi_x > 0} \ {Psi_k > 0}|.
double exact_gain_at(const OccupancyMap& map, const ExplorationState& state, const Vantage& x,
                     VisibilityMethod method = VisibilityMethod::sweep);

/// exact_gain_at() on every candidate node, 0 elsewhere. Data-parallel over
/// candidates; the result does not depend on the worker count.
GainField exact_gain_field(const OccupancyMap& map, const ExplorationState& state, GainMode mode,
                           const GainOptions& options = {});

/// Visibility sets {psi_x > 0} of every free node of one map, packed as bits.
///
/// The sets depend only on the map, so once built, a gain field for any state
/// is a masked popcount per candidate. Counts are identical to
/// exact_gain_count() with the same visibility method.
class VisibilityCache {
 public:
  VisibilityCache(const OccupancyMap& map, const GainOptions& options = {});

  /// Bytes the cache for this map would occupy.
  static std::size_t footprint(const OccupancyMap& map);

  const OccupancyMap& map() const noexcept { return map_; }
  VisibilityMethod method() const noexcept { return method_; }
  std::size_t gain_count(std::size_t node, const std::vector<std::uint64_t>& seen_bits) const;
  GainField gain_field(const ExplorationState& state, GainMode mode, unsigned workers = 1) const;
  /// Packs {Psi_k > 0}.
  std::vector<std::uint64_t> pack_seen(const ExplorationState& state) const;

 private:
  OccupancyMap map_;
  VisibilityMethod method_;
  std::size_t words_ = 0;
  std::vector<std::int64_t> row_of_node_;  // -1 for obstacle nodes
  std::vector<std::uint64_t> bits_;
};

}  // namespace vantage
