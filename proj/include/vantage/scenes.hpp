#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vantage/grid.hpp"

namespace vantage {

// ---------------------------------------------------------------------------
// Occupancy images

/// A binary occupancy image: 1 = free, 0 = obstacle, row 0 = top.
struct BinaryImage {
  std::vector<int> shape;  // {rows, cols}
  Mask free;
};

/// Reads a PGM (P2/P5) or single-channel/convertible PNG. Pixels brighter
/// than `threshold` (on a 0..255 scale) are obstacles.
BinaryImage load_mask(const std::filesystem::path& path, double threshold = 127.0);

/// Writes a mask as binary PGM, obstacles white (255) and free space black.
void write_mask_pgm(const BinaryImage& image, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Polygon galleries
//
// Polygon coordinates are world units with x along grid axis 1 (columns) and
// y along grid axis 0 (rows).

using Point2 = std::array<double, 2>;

class PolygonGallery {
 public:
  /// Validates the loops and orients them: outer counter-clockwise, holes
  /// clockwise. Throws invalid_polygon for fewer than 3 vertices, repeated
  /// consecutive vertices, zero area, self-intersection, or holes not strictly
  /// inside the outer loop.
  PolygonGallery(std::vector<Point2> outer, std::vector<std::vector<Point2>> holes = {});

  const std::vector<Point2>& outer() const noexcept { return outer_; }
  const std::vector<std::vector<Point2>>& holes() const noexcept { return holes_; }
  /// Even-odd containment over all loops.
  bool contains(const Point2& p) const;
  Point2 centroid() const;

  static PolygonGallery from_json(const nlohmann::json& j);
  static PolygonGallery load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;

 private:
  std::vector<Point2> outer_;
  std::vector<std::vector<Point2>> holes_;
};

struct GalleryBounds {
  int n = 0;        // vertices over all loops
  int h = 0;        // holes
  int reflex = 0;   // interior angle > pi
  int chvatal = 0;  // floor((n + h) / 3) point guards
  int frontier = 0; // reflex + 1 views for frontier exploration
};

GalleryBounds gallery_bounds(const PolygonGallery& poly);

/// Free iff the node centre is inside the polygon (even-odd rule). Requires a
/// margin of at least 2 dx between the polygon and the grid box.
Mask rasterize_gallery(const PolygonGallery& poly, const GridGeometry& geometry);

/// Comb gallery with 58 vertices and 19 reflex angles: ten teeth on a base
/// bar, fifteen chamfered tooth corners and a V notch in the base.
PolygonGallery comb_gallery();
/// A grid that holds comb_gallery() with a 3-node margin.
GridGeometry comb_geometry();

/// Regular convex polygon centred at `centre`.
PolygonGallery regular_polygon(int sides, Point2 centre, double radius);

// ---------------------------------------------------------------------------
// Scene synthesis

enum class SceneFamily { radial, disks, blocks, primitives3d };

std::string to_string(SceneFamily family);
SceneFamily scene_family_from_string(const std::string& name);

/// Parameters of a random scene. Ranges are inclusive.
///
/// radial       count = star obstacles, size = mean star radius (nodes)
/// disks        count = disks,          size = disk radius (nodes)
/// blocks       count = blocks per axis, size = street width (nodes)
/// primitives3d count = solids,         size = solid half-extent (nodes)
struct SceneRecipe {
  SceneFamily family = SceneFamily::disks;
  std::uint64_t seed = 0;
  std::vector<int> shape{64, 64};
  double dx = 1.0;
  int count_min = 1;
  int count_max = 1;
  double size_min = 1.0;
  double size_max = 1.0;
  double obstacle_min = 0.0;
  double obstacle_max = 0.9;

  /// Sensible ranges for `family` on a grid of `shape`.
  static SceneRecipe defaults(SceneFamily family, std::vector<int> shape, std::uint64_t seed);
  static SceneRecipe from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  GridGeometry geometry() const;
  void validate() const;
};

/// Seeded scene generation. Free space is made face-connected by filling
/// every free component but the largest; a draw is accepted when free space
/// covers >= 10% of nodes and the obstacle fraction lies in the recipe range.
/// Throws generation_failure after 100 rejected draws.
Mask generate_scene(const SceneRecipe& recipe);

/// Sizes of face-connected free components, largest first.
std::vector<std::size_t> free_components(const Mask& free, const GridGeometry& geometry);

}  // namespace vantage
