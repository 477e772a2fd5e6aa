#include "vantage/gain.hpp"

#include <algorithm>
#include <bit>

#include "vantage/parallel.hpp"

namespace vantage {

std::size_t GainField::candidate_count() const {
  return static_cast<std::size_t>(std::count(candidates.begin(), candidates.end(), std::uint8_t{1}));
}

Mask candidate_mask(const OccupancyMap& map, const ExplorationState& state, GainMode mode) {
  if (!(state.geometry() == map.geometry())) {
    throw Error(ErrorCode::invalid_argument, "state geometry does not match map");
  }
  Mask m(map.geometry().size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = mode == GainMode::surveillance ? map.is_free(i) : state.seen(i);
  }
  return m;
}

namespace {

std::size_t count_uncovered(const std::vector<double>& psi, const ExplorationState& state) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (heaviside(psi[i]) - heaviside(state.psi_cum()[i]) > 0.0) ++n;
  }
  return n;
}

}  // namespace

std::size_t exact_gain_count(const OccupancyMap& map, const ExplorationState& state, const Vantage& x,
                             VisibilityMethod method) {
  if (!(state.geometry() == map.geometry())) {
    throw Error(ErrorCode::invalid_argument, "state geometry does not match map");
  }
  std::vector<double> psi;
  visibility_values(map, x, method, psi);
  return count_uncovered(psi, state);
}

double exact_gain_at(const OccupancyMap& map, const ExplorationState& state, const Vantage& x,
                     VisibilityMethod method) {
  return static_cast<double>(exact_gain_count(map, state, x, method)) * map.geometry().cell_volume();
}

GainField exact_gain_field(const OccupancyMap& map, const ExplorationState& state, GainMode mode,
                           const GainOptions& options) {
  const auto& g = map.geometry();
  Mask candidates = candidate_mask(map, state, mode);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i]) todo.push_back(i);
  }
  std::vector<double> values(g.size(), 0.0);
  const double cell = g.cell_volume();
  parallel_for(todo.size(), options.workers, [&](std::size_t t) {
    thread_local std::vector<double> psi;
    const std::size_t node = todo[t];
    visibility_values(map, Vantage{g.node(node)}, options.method, psi);
    values[node] = static_cast<double>(count_uncovered(psi, state)) * cell;
  }, 4);
  return GainField{ScalarField(g, std::move(values)), std::move(candidates)};
}

std::size_t VisibilityCache::footprint(const OccupancyMap& map) {
  const std::size_t words = (map.geometry().size() + 63) / 64;
  return words * sizeof(std::uint64_t) * map.free_count();
}

VisibilityCache::VisibilityCache(const OccupancyMap& map, const GainOptions& options)
    : map_(map), method_(options.method) {
  const auto& g = map_.geometry();
  words_ = (g.size() + 63) / 64;
  row_of_node_.assign(g.size(), -1);
  std::vector<std::size_t> free_nodes;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (map_.is_free(i)) {
      row_of_node_[i] = static_cast<std::int64_t>(free_nodes.size());
      free_nodes.push_back(i);
    }
  }
  bits_.assign(free_nodes.size() * words_, 0);
  parallel_for(free_nodes.size(), options.workers, [&](std::size_t r) {
    thread_local std::vector<double> psi;
    visibility_values(map_, Vantage{g.node(free_nodes[r])}, method_, psi);
    std::uint64_t* row = bits_.data() + r * words_;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      if (psi[i] > 0.0) row[i / 64] |= std::uint64_t{1} << (i % 64);
    }
  }, 4);
}

std::vector<std::uint64_t> VisibilityCache::pack_seen(const ExplorationState& state) const {
  if (!(state.geometry() == map_.geometry())) {
    throw Error(ErrorCode::invalid_argument, "state geometry does not match cached map");
  }
  std::vector<std::uint64_t> seen(words_, 0);
  for (std::size_t i = 0; i < state.psi_cum().size(); ++i) {
    if (state.seen(i)) seen[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  return seen;
}

std::size_t VisibilityCache::gain_count(std::size_t node, const std::vector<std::uint64_t>& seen_bits) const {
  const std::int64_t r = row_of_node_.at(node);
  if (r < 0) throw Error(ErrorCode::invalid_vantage, "vantage is not in free space");
  const std::uint64_t* row = bits_.data() + static_cast<std::size_t>(r) * words_;
  std::size_t n = 0;
  for (std::size_t w = 0; w < words_; ++w) n += static_cast<std::size_t>(std::popcount(row[w] & ~seen_bits[w]));
  return n;
}

GainField VisibilityCache::gain_field(const ExplorationState& state, GainMode mode, unsigned workers) const {
  const auto& g = map_.geometry();
  Mask candidates = candidate_mask(map_, state, mode);
  const auto seen = pack_seen(state);
  std::vector<double> values(g.size(), 0.0);
  const double cell = g.cell_volume();
  parallel_for(g.size(), workers, [&](std::size_t i) {
    if (candidates[i]) values[i] = static_cast<double>(gain_count(i, seen)) * cell;
  }, 256);
  return GainField{ScalarField(g, std::move(values)), std::move(candidates)};
}

}  // namespace vantage
