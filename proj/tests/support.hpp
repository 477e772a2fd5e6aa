#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "vantage/gain.hpp"
#include "vantage/grid.hpp"
#include "vantage/planner.hpp"
#include "vantage/random.hpp"
#include "vantage/scenes.hpp"
#include "vantage/visibility.hpp"

namespace testsupport {

using namespace vantage;

inline OccupancyMap disks_map(const GridGeometry& g, const std::vector<std::array<double, 3>>& disks) {
  Mask free(g.size(), 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Node n = g.node(i);
    for (const auto& d : disks) {
      const double r0 = n[0] - d[0], r1 = n[1] - d[1];
      if (r0 * r0 + r1 * r1 <= d[2] * d[2]) free[i] = 0;
    }
  }
  return signed_distance(free, g);
}

// Two occluding disks on a 64x64 grid, vantage on the left.
inline OccupancyMap two_disk_map() {
  return disks_map(GridGeometry::square(64), {{{22.0, 28.0, 7.0}}, {{44.0, 36.0, 7.0}}});
}
inline Vantage two_disk_x0() { return Vantage{{32, 6, 0}}; }

// Square room with a one-node wall ring.
inline OccupancyMap room_map(int n) {
  const auto g = GridGeometry::square(n);
  Mask free(g.size(), 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Node v = g.node(i);
    if (v[0] == 0 || v[1] == 0 || v[0] == n - 1 || v[1] == n - 1) free[i] = 0;
  }
  return signed_distance(free, g);
}

inline OccupancyMap recipe_map(SceneFamily family, std::vector<int> shape, std::uint64_t seed) {
  const auto recipe = SceneRecipe::defaults(family, std::move(shape), seed);
  return signed_distance(generate_scene(recipe), recipe.geometry());
}

inline Vantage random_free(const OccupancyMap& map, Rng& rng) {
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < map.geometry().size(); ++i) {
    if (map.is_free(i)) free.push_back(i);
  }
  return Vantage{map.geometry().node(free[uniform_index(rng, free.size())])};
}

// Dense reference: minimum of phi along [x, y] with index-space step <= 1/8.
inline double ray_oracle(const ScalarField& phi, const Node& x, const Node& y) {
  Point d{};
  double len2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    d[a] = y[a] - x[a];
    len2 += d[a] * d[a];
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(std::sqrt(len2) * 8.0)));
  double m = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const Point q{x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]};
    m = std::min(m, sample_index_space(phi, q));
  }
  return m;
}

inline double sign_agreement(const ScalarField& a, const ScalarField& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += (a[i] > 0.0) == (b[i] > 0.0);
  return static_cast<double>(same) / static_cast<double>(a.size());
}

inline ScalarField oracle_visibility(const OccupancyMap& map, const Vantage& x) {
  const auto& g = map.geometry();
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = ray_oracle(map.phi(), x.node, g.node(i));
  return ScalarField(g, std::move(v));
}

// Node-by-node gain loop used as the field oracle.
inline std::vector<double> naive_gain_loop(const OccupancyMap& map, const ExplorationState& state, GainMode mode) {
  const auto& g = map.geometry();
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool candidate = mode == GainMode::surveillance ? map.is_free(i) : state.seen(i);
    if (candidate) out[i] = exact_gain_at(map, state, Vantage{g.node(i)});
  }
  return out;
}

inline ExplorationState observe_all(const OccupancyMap& map, const std::vector<Vantage>& xs) {
  auto state = ExplorationState::empty(map.geometry());
  for (const auto& x : xs) state = observe(map, state, x, default_eps(map.geometry()));
  return state;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("vantage_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// FNV-1a over sorted relative paths and file bytes.
inline std::uint64_t directory_hash(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(std::filesystem::relative(e.path(), root));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : files) {
    mix(f.generic_string());
    mix(slurp(root / f));
  }
  return h;
}

}  // namespace testsupport
