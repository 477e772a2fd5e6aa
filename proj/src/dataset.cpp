#include "vantage/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>

#include "vantage/parallel.hpp"
#include "vantage/planner.hpp"
#include "vantage/random.hpp"

namespace vantage {

TrainingPair emit_pair(const ExplorationState& state, const GainField& exploration_gain, PairMeta meta) {
  const auto& g = state.geometry();
  if (!(exploration_gain.values.geometry() == g)) {
    throw Error(ErrorCode::invalid_argument, "gain field geometry does not match state");
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (state.seen(i)) peak = std::max(peak, exploration_gain.values[i]);
  }
  std::vector<double> target(g.size(), 0.0);
  if (peak > 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (state.seen(i)) target[i] = std::clamp(exploration_gain.values[i] / peak, 0.0, 1.0);
    }
  }
  meta.normalization = peak;
  meta.step = state.k();
  return TrainingPair{state.psi_cum(), state.boundary(), ScalarField(g, std::move(target)), std::move(meta)};
}

TrainingPair emit_pair(const OccupancyMap& map, const ExplorationState& state, const GainOptions& options,
                       PairMeta meta) {
  return emit_pair(state, exact_gain_field(map, state, GainMode::exploration, options), std::move(meta));
}

std::uint64_t map_seed(std::uint64_t global_seed, std::size_t index, std::uint64_t recipe_seed) {
  return splitmix64(splitmix64(global_seed ^ splitmix64(index)) ^ recipe_seed);
}

namespace {

struct PairEntry {
  std::string psi, boundary, target;
  PairMeta meta;
};

std::string pair_stem(std::size_t map, int episode, int step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "m%04zu_e%03d_k%03d", map, episode, step);
  return buf;
}

}  // namespace

nlohmann::ordered_json generate_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
  if (config.recipes.empty()) throw Error(ErrorCode::invalid_argument, "dataset needs at least one recipe");
  if (config.episodes_per_map < 1 || config.steps_per_episode < 1) {
    throw Error(ErrorCode::invalid_argument, "episodes and steps per episode must be positive");
  }
  for (const auto& r : config.recipes) r.validate();

  const auto pair_dir = out_dir / "pairs";
  std::error_code ec;
  std::filesystem::create_directories(pair_dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + pair_dir.string() + ": " + ec.message());

  std::mutex written_mutex;
  std::vector<std::filesystem::path> written;
  std::vector<std::vector<PairEntry>> per_map(config.recipes.size());

  auto cleanup = [&] {
    std::error_code ignore;
    for (const auto& p : written) std::filesystem::remove(p, ignore);
    std::filesystem::remove(out_dir / "manifest.json", ignore);
    std::filesystem::remove(pair_dir, ignore);  // only succeeds when empty
  };

  try {
    parallel_for(config.recipes.size(), config.workers, [&](std::size_t m) {
      SceneRecipe recipe = config.recipes[m];
      recipe.seed = map_seed(config.seed, m, recipe.seed);
      const auto geometry = recipe.geometry();
      const auto map = signed_distance(generate_scene(recipe), geometry);
      std::vector<std::size_t> free_nodes;
      for (std::size_t i = 0; i < geometry.size(); ++i) {
        if (map.is_free(i)) free_nodes.push_back(i);
      }
      char id[16];
      std::snprintf(id, sizeof id, "map%04zu", m);
      ExactEstimator estimator(GainMode::exploration);
      for (int e = 0; e < config.episodes_per_map; ++e) {
        const std::uint64_t episode_seed = splitmix64(recipe.seed + static_cast<std::uint64_t>(e) + 1);
        Rng rng(episode_seed);
        const Vantage x0{geometry.node(free_nodes[uniform_index(rng, free_nodes.size())])};
        StopRule stop;
        stop.eps_gain = 0.0;
        stop.delta_residual = 0.0;
        stop.max_steps = config.steps_per_episode;
        EpisodeOptions options;
        options.on_step = [&](const ExplorationState& state) {
          auto pair = emit_pair(state, estimator.field(map, state), PairMeta{id, e, 0, recipe.seed, 0.0});
          const std::string stem = pair_stem(m, e, pair.meta.step);
          PairEntry entry{"pairs/" + stem + "_psi.rfa", "pairs/" + stem + "_boundary.rfa",
                          "pairs/" + stem + "_target.rfa", pair.meta};
          const std::array<std::pair<const ScalarField*, const std::string*>, 3> files{
              {{&pair.psi, &entry.psi}, {&pair.boundary, &entry.boundary}, {&pair.target, &entry.target}}};
          for (const auto& [field, rel] : files) {
            const auto path = out_dir / *rel;
            {
              std::lock_guard lock(written_mutex);
              written.push_back(path);
            }
            write_rfa(*field, path);
          }
          per_map[m].push_back(std::move(entry));
        };
        run_episode(map, estimator, x0, stop, episode_seed, options);
      }
    }, 1);

    nlohmann::ordered_json manifest;
    manifest["format"] = "vantage-dataset-1";
    manifest["global_seed"] = config.seed;
    manifest["episodes_per_map"] = config.episodes_per_map;
    manifest["steps_per_episode"] = config.steps_per_episode;
    manifest["normalization"] = "per-pair max of exploration gain";
    manifest["recipes"] = nlohmann::ordered_json::array();
    for (std::size_t m = 0; m < config.recipes.size(); ++m) {
      auto r = config.recipes[m].to_json();
      r["derived_seed"] = map_seed(config.seed, m, config.recipes[m].seed);
      manifest["recipes"].push_back(r);
    }
    auto pairs = nlohmann::ordered_json::array();
    for (const auto& entries : per_map) {
      for (const auto& e : entries) {
        nlohmann::ordered_json p;
        p["psi"] = e.psi;
        p["boundary"] = e.boundary;
        p["target"] = e.target;
        p["map_id"] = e.meta.map_id;
        p["episode"] = e.meta.episode;
        p["step"] = e.meta.step;
        p["seed"] = e.meta.seed;
        p["normalization"] = e.meta.normalization;
        pairs.push_back(std::move(p));
      }
    }
    manifest["count"] = pairs.size();
    manifest["pairs"] = std::move(pairs);

    const auto manifest_path = out_dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + manifest_path.string());
    out << manifest.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::io_error, "short write to " + manifest_path.string());
    return manifest;
  } catch (...) {
    cleanup();
    throw;
  }
}

}  // namespace vantage
