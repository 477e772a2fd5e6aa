#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vantage/gain.hpp"
#include "vantage/grid.hpp"
#include "vantage/rfa.hpp"
#include "vantage/scenes.hpp"
#include "vantage/visibility.hpp"

namespace vantage {

struct PairMeta {
  std::string map_id;
  int episode = 0;
  int step = 0;
  std::uint64_t seed = 0;
  /// Raw maximum of the exploration gain (volume units) the target was
  /// divided by; 0 when the gain vanished everywhere.
  double normalization = 0.0;
};

/// Input (Psi_k, b_k) and target g * H(Psi_k) / max, all on one geometry.
struct TrainingPair {
  ScalarField psi;
  ScalarField boundary;
  ScalarField target;
  PairMeta meta;
};

/// Builds a pair from an exploration-mode gain field of `state`. The target
/// is the field divided by its maximum (all zeros when the maximum is 0).
TrainingPair emit_pair(const ExplorationState& state, const GainField& exploration_gain, PairMeta meta = {});

/// Same, evaluating the exact exploration gain field directly.
TrainingPair emit_pair(const OccupancyMap& map, const ExplorationState& state, const GainOptions& options = {},
                       PairMeta meta = {});

struct DatasetConfig {
  std::vector<SceneRecipe> recipes;  // one map per recipe
  int episodes_per_map = 1;
  int steps_per_episode = 8;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Seed of map `index`: splitmix of the global seed, mixed with the recipe's.
std::uint64_t map_seed(std::uint64_t global_seed, std::size_t index, std::uint64_t recipe_seed);

/// Runs exact-greedy exploration episodes on every recipe's map and writes
/// one RFA triplet per step under <out_dir>/pairs plus <out_dir>/manifest.json.
/// Output bytes are a function of the config alone. On failure every file
/// written so far is removed and no manifest is left behind.
nlohmann::ordered_json generate_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

}  // namespace vantage
