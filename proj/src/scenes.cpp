#include "vantage/scenes.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <iterator>
#include <numbers>

#include "vantage/random.hpp"

namespace vantage {

// ---------------------------------------------------------------------------
// Occupancy images

namespace {

struct PgmReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  }
  long number() {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw Error(ErrorCode::format_error, "PGM: expected a number");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1'000'000'000L) throw Error(ErrorCode::format_error, "PGM: number too large");
    }
    return v;
  }
};

BinaryImage load_pgm(const std::vector<std::uint8_t>& bytes, double threshold) {
  PgmReader r{bytes};
  const bool ascii = bytes[1] == '2';
  r.pos = 2;
  const long cols = r.number();
  const long rows = r.number();
  const long maxval = r.number();
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535) throw Error(ErrorCode::format_error, "PGM: bad header");
  const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  BinaryImage img{{static_cast<int>(rows), static_cast<int>(cols)}, Mask(count)};
  const double scale = 255.0 / static_cast<double>(maxval);
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) {
      const long v = r.number();
      if (v > maxval) throw Error(ErrorCode::format_error, "PGM: sample exceeds maxval");
      img.free[i] = v * scale > threshold ? 0 : 1;
    }
  } else {
    ++r.pos;  // single whitespace after maxval
    const std::size_t width = maxval < 256 ? 1 : 2;
    if (bytes.size() < r.pos + count * width) throw Error(ErrorCode::format_error, "PGM: truncated raster");
    for (std::size_t i = 0; i < count; ++i) {
      long v = bytes[r.pos];
      if (width == 2) v = (v << 8) | bytes[r.pos + 1];
      r.pos += width;
      img.free[i] = v * scale > threshold ? 0 : 1;
    }
  }
  r.skip_space();
  if (r.pos != bytes.size()) throw Error(ErrorCode::format_error, "PGM: trailing data (multi-frame files are not supported)");
  return img;
}

BinaryImage load_png(const std::filesystem::path& path, double threshold) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(ErrorCode::format_error, std::string("PNG: ") + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::format_error, std::string("PNG: ") + image.message);
  }
  BinaryImage img{{static_cast<int>(image.height), static_cast<int>(image.width)}, Mask(buffer.size())};
  for (std::size_t i = 0; i < buffer.size(); ++i) img.free[i] = buffer[i] > threshold ? 0 : 1;
  return img;
}

}  // namespace

BinaryImage load_mask(const std::filesystem::path& path, double threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::format_error, "cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) return load_pgm(bytes, threshold);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return load_png(path, threshold);
  throw Error(ErrorCode::format_error, "unrecognised image format: " + path.string());
}

void write_mask_pgm(const BinaryImage& image, const std::filesystem::path& path) {
  if (image.shape.size() != 2) throw Error(ErrorCode::invalid_argument, "PGM masks are two-dimensional");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << "P5\n" << image.shape[1] << " " << image.shape[0] << "\n255\n";
  for (auto f : image.free) out.put(static_cast<char>(f ? 0 : 255));
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Polygon galleries

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double signed_area(const std::vector<Point2>& loop) {
  double s = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const auto& a = loop[i];
    const auto& b = loop[(i + 1) % loop.size()];
    s += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * s;
}

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
  return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= p[1] &&
         p[1] <= std::max(a[1], b[1]);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_touch(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) || (d3 == 0 && on_segment(c, a, b)) ||
         (d4 == 0 && on_segment(d, a, b));
}

bool loop_contains(const std::vector<Point2>& loop, const Point2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
    const auto& a = loop[i];
    const auto& b = loop[j];
    if ((a[1] > p[1]) != (b[1] > p[1])) {
      const double x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
      if (p[0] < x) inside = !inside;
    }
  }
  return inside;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::invalid_polygon, what); }

}  // namespace

PolygonGallery::PolygonGallery(std::vector<Point2> outer, std::vector<std::vector<Point2>> holes)
    : outer_(std::move(outer)), holes_(std::move(holes)) {
  std::vector<std::vector<Point2>*> loops{&outer_};
  for (auto& h : holes_) loops.push_back(&h);
  for (auto* loop : loops) {
    if (loop->size() < 3) invalid("a loop needs at least 3 vertices");
    for (std::size_t i = 0; i < loop->size(); ++i) {
      const auto& p = (*loop)[i];
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) invalid("non-finite vertex");
      if (p == (*loop)[(i + 1) % loop->size()]) invalid("repeated consecutive vertex");
    }
    if (std::abs(signed_area(*loop)) < 1e-12) invalid("loop has zero area");
  }
  if (signed_area(outer_) < 0.0) std::reverse(outer_.begin(), outer_.end());
  for (auto& h : holes_) {
    if (signed_area(h) > 0.0) std::reverse(h.begin(), h.end());
  }

  struct Edge {
    std::size_t loop, index;
    Point2 a, b;
  };
  std::vector<Edge> edges;
  for (std::size_t l = 0; l < loops.size(); ++l) {
    const auto& loop = *loops[l];
    for (std::size_t i = 0; i < loop.size(); ++i) edges.push_back({l, i, loop[i], loop[(i + 1) % loop.size()]});
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    for (std::size_t f = e + 1; f < edges.size(); ++f) {
      const auto& p = edges[e];
      const auto& q = edges[f];
      if (p.loop == q.loop) {
        const std::size_t n = loops[p.loop]->size();
        const bool adjacent = (p.index + 1) % n == q.index || (q.index + 1) % n == p.index;
        if (adjacent) {
          // Shared vertex only; reject an edge folding back onto its neighbour.
          const Point2& shared = (p.index + 1) % n == q.index ? p.b : p.a;
          const Point2& pe = shared == p.a ? p.b : p.a;
          const Point2& qe = shared == q.a ? q.b : q.a;
          if (cross(shared, pe, qe) == 0.0 && (pe[0] - shared[0]) * (qe[0] - shared[0]) + (pe[1] - shared[1]) * (qe[1] - shared[1]) > 0.0) {
            invalid("overlapping consecutive edges");
          }
          continue;
        }
      }
      if (segments_touch(p.a, p.b, q.a, q.b)) invalid("polygon edges intersect");
    }
  }
  for (const auto& h : holes_) {
    if (!loop_contains(outer_, h.front())) invalid("hole lies outside the outer loop");
    for (const auto& other : holes_) {
      if (&other != &h && loop_contains(other, h.front())) invalid("nested holes are not supported");
    }
  }
}

bool PolygonGallery::contains(const Point2& p) const {
  bool inside = loop_contains(outer_, p);
  for (const auto& h : holes_) {
    if (loop_contains(h, p)) inside = !inside;
  }
  return inside;
}

Point2 PolygonGallery::centroid() const {
  double area = 0.0, cx = 0.0, cy = 0.0;
  auto add = [&](const std::vector<Point2>& loop) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const auto& a = loop[i];
      const auto& b = loop[(i + 1) % loop.size()];
      const double w = a[0] * b[1] - b[0] * a[1];
      area += w;
      cx += (a[0] + b[0]) * w;
      cy += (a[1] + b[1]) * w;
    }
  };
  add(outer_);
  for (const auto& h : holes_) add(h);
  return {cx / (3.0 * area), cy / (3.0 * area)};
}

PolygonGallery PolygonGallery::from_json(const nlohmann::json& j) {
  try {
    auto outer = j.at("outer").get<std::vector<Point2>>();
    std::vector<std::vector<Point2>> holes;
    if (j.contains("holes")) holes = j.at("holes").get<std::vector<std::vector<Point2>>>();
    return PolygonGallery(std::move(outer), std::move(holes));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("polygon JSON: ") + e.what());
  }
}

PolygonGallery PolygonGallery::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::format_error, "polygon file is not valid JSON: " + path.string());
  return from_json(j);
}

nlohmann::ordered_json PolygonGallery::to_json() const {
  return nlohmann::ordered_json{{"outer", outer_}, {"holes", holes_}};
}

GalleryBounds gallery_bounds(const PolygonGallery& poly) {
  GalleryBounds b;
  b.h = static_cast<int>(poly.holes().size());
  auto scan = [&](const std::vector<Point2>& loop) {
    const std::size_t n = loop.size();
    b.n += static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Loops are oriented with the interior on the left, so a right turn
      // marks an interior angle above pi.
      if (cross(loop[(i + n - 1) % n], loop[i], loop[(i + 1) % n]) < 0.0) ++b.reflex;
    }
  };
  scan(poly.outer());
  for (const auto& h : poly.holes()) scan(h);
  b.chvatal = (b.n + b.h) / 3;
  b.frontier = b.reflex + 1;
  return b;
}

Mask rasterize_gallery(const PolygonGallery& poly, const GridGeometry& geometry) {
  if (geometry.dim() != 2) throw Error(ErrorCode::invalid_argument, "galleries rasterize onto 2D grids");
  const double dx = geometry.dx();
  const auto& o = geometry.origin();
  const double xmin = o[1] + 2 * dx, xmax = o[1] + (geometry.extent(1) - 3) * dx;
  const double ymin = o[0] + 2 * dx, ymax = o[0] + (geometry.extent(0) - 3) * dx;
  for (const auto& p : poly.outer()) {
    if (p[0] < xmin || p[0] > xmax || p[1] < ymin || p[1] > ymax) {
      throw Error(ErrorCode::invalid_argument, "polygon does not fit the grid with a 2-node margin");
    }
  }
  Mask m(geometry.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Point w = geometry.world(geometry.node(i));
    m[i] = poly.contains({w[1], w[0]}) ? 1 : 0;
  }
  if (std::find(m.begin(), m.end(), std::uint8_t{1}) == m.end()) invalid("polygon covers no grid node");
  return m;
}

PolygonGallery comb_gallery() {
  constexpr int teeth = 10;
  constexpr double width = 6, gap = 4, base = 12, height = 40, chamfer = 2;
  constexpr double x0 = 4, y0 = 3;
  constexpr double right = x0 + teeth * width + (teeth - 1) * gap;
  constexpr double top = y0 + base + height;
  constexpr double mid = x0 + 0.5 * (right - x0);
  // Corners chamfered: both top corners of teeth 0..6 and the right one of tooth 7.
  auto chamfered = [](int tooth, bool right_corner) { return tooth < 7 || (tooth == 7 && right_corner); };

  std::vector<Point2> v;
  v.push_back({x0, y0});
  v.push_back({mid - 3, y0});
  v.push_back({mid, y0 + 3});  // V notch: the only reflex vertex on the base
  v.push_back({mid + 3, y0});
  v.push_back({right, y0});
  for (int t = teeth - 1; t >= 0; --t) {
    const double xl = x0 + t * (width + gap);
    const double xr = xl + width;
    if (chamfered(t, true)) {
      v.push_back({xr, top - chamfer});
      v.push_back({xr - chamfer, top});
    } else {
      v.push_back({xr, top});
    }
    if (chamfered(t, false)) {
      v.push_back({xl + chamfer, top});
      v.push_back({xl, top - chamfer});
    } else {
      v.push_back({xl, top});
    }
    if (t > 0) {
      v.push_back({xl, y0 + base});
      v.push_back({xl - gap, y0 + base});
    }
  }
  return PolygonGallery(std::move(v));
}

GridGeometry comb_geometry() {
  const std::array<int, 2> shape{60, 104};
  return GridGeometry(shape, 1.0);
}

PolygonGallery regular_polygon(int sides, Point2 centre, double radius) {
  if (sides < 3) invalid("a polygon needs at least 3 sides");
  std::vector<Point2> v;
  for (int i = 0; i < sides; ++i) {
    const double a = 2.0 * std::numbers::pi * i / sides;
    v.push_back({centre[0] + radius * std::cos(a), centre[1] + radius * std::sin(a)});
  }
  return PolygonGallery(std::move(v));
}

// ---------------------------------------------------------------------------
// Scene synthesis

std::string to_string(SceneFamily family) {
  switch (family) {
    case SceneFamily::radial: return "radial";
    case SceneFamily::disks: return "disks";
    case SceneFamily::blocks: return "blocks";
    case SceneFamily::primitives3d: return "primitives3d";
  }
  return "unknown";
}

SceneFamily scene_family_from_string(const std::string& name) {
  if (name == "radial") return SceneFamily::radial;
  if (name == "disks") return SceneFamily::disks;
  if (name == "blocks") return SceneFamily::blocks;
  if (name == "primitives3d") return SceneFamily::primitives3d;
  throw Error(ErrorCode::invalid_argument, "unknown scene family '" + name + "'");
}

SceneRecipe SceneRecipe::defaults(SceneFamily family, std::vector<int> shape, std::uint64_t seed) {
  SceneRecipe r;
  r.family = family;
  r.seed = seed;
  r.shape = std::move(shape);
  const double n = r.shape.empty() ? 64.0 : *std::min_element(r.shape.begin(), r.shape.end());
  switch (family) {
    case SceneFamily::disks:
      r.count_min = 3;
      r.count_max = 8;
      r.size_min = std::max(1.0, n / 20);
      r.size_max = std::max(1.5, n / 8);
      break;
    case SceneFamily::radial:
      r.count_min = 1;
      r.count_max = 3;
      r.size_min = std::max(1.5, n / 10);
      r.size_max = std::max(2.0, n / 5);
      break;
    case SceneFamily::blocks:
      r.count_min = 4;
      r.count_max = 6;
      r.size_min = 2;
      r.size_max = std::max(2.0, n / 24);
      break;
    case SceneFamily::primitives3d:
      r.count_min = 3;
      r.count_max = 8;
      r.size_min = std::max(1.5, n / 10);
      r.size_max = std::max(2.0, n / 5);
      r.obstacle_min = 0.01;
      r.obstacle_max = 0.6;
      break;
  }
  return r;
}

SceneRecipe SceneRecipe::from_json(const nlohmann::json& j) {
  try {
    const auto family = scene_family_from_string(j.at("family").get<std::string>());
    SceneRecipe r = defaults(family, j.value("shape", std::vector<int>{64, 64}), j.value("seed", std::uint64_t{0}));
    r.dx = j.value("dx", r.dx);
    if (j.contains("count")) {
      r.count_min = j.at("count").at(0).get<int>();
      r.count_max = j.at("count").at(1).get<int>();
    }
    if (j.contains("size")) {
      r.size_min = j.at("size").at(0).get<double>();
      r.size_max = j.at("size").at(1).get<double>();
    }
    if (j.contains("obstacle_fraction")) {
      r.obstacle_min = j.at("obstacle_fraction").at(0).get<double>();
      r.obstacle_max = j.at("obstacle_fraction").at(1).get<double>();
    }
    r.validate();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::format_error, std::string("recipe JSON: ") + e.what());
  }
}

nlohmann::ordered_json SceneRecipe::to_json() const {
  nlohmann::ordered_json j;
  j["family"] = to_string(family);
  j["seed"] = seed;
  j["shape"] = shape;
  j["dx"] = dx;
  j["count"] = {count_min, count_max};
  j["size"] = {size_min, size_max};
  j["obstacle_fraction"] = {obstacle_min, obstacle_max};
  return j;
}

GridGeometry SceneRecipe::geometry() const { return GridGeometry(shape, dx); }

void SceneRecipe::validate() const {
  const auto g = geometry();
  if (family == SceneFamily::primitives3d && g.dim() != 3) {
    throw Error(ErrorCode::invalid_argument, "primitives3d scenes are three-dimensional");
  }
  if ((family == SceneFamily::blocks || family == SceneFamily::radial) && g.dim() != 2) {
    throw Error(ErrorCode::invalid_argument, to_string(family) + " scenes are two-dimensional");
  }
  if (count_min < 0 || count_max < count_min) throw Error(ErrorCode::invalid_argument, "bad count range");
  if (!(size_min > 0.0) || size_max < size_min) throw Error(ErrorCode::invalid_argument, "bad size range");
  if (!(obstacle_min >= 0.0) || obstacle_max < obstacle_min || obstacle_max > 1.0) {
    throw Error(ErrorCode::invalid_argument, "bad obstacle fraction range");
  }
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 random_rotation(Rng& rng) {
  // Uniform unit quaternion (Shoemake).
  const double u1 = uniform_real(rng, 0, 1), u2 = uniform_real(rng, 0, 2 * std::numbers::pi),
               u3 = uniform_real(rng, 0, 2 * std::numbers::pi);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double w = a * std::sin(u2), x = a * std::cos(u2), y = b * std::sin(u3), z = b * std::cos(u3);
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

// p expressed in the rotated frame: R^T p.
std::array<double, 3> to_local(const Mat3& r, const std::array<double, 3>& p) {
  std::array<double, 3> q{};
  for (int i = 0; i < 3; ++i) q[i] = r[0][i] * p[0] + r[1][i] * p[1] + r[2][i] * p[2];
  return q;
}

void paint_disks(Mask& m, const GridGeometry& g, const SceneRecipe& rc, Rng& rng) {
  const int count = uniform_int(rng, rc.count_min, rc.count_max);
  struct Ball {
    std::array<double, 3> c;
    double r;
  };
  std::vector<Ball> balls;
  for (int d = 0; d < count; ++d) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      Ball b{{0, 0, 0}, uniform_real(rng, rc.size_min, rc.size_max)};
      for (int a = 0; a < g.dim(); ++a) b.c[static_cast<std::size_t>(a)] = uniform_real(rng, 0, g.extent(a) - 1);
      const bool overlaps = std::any_of(balls.begin(), balls.end(), [&](const Ball& o) {
        const double dx = b.c[0] - o.c[0], dy = b.c[1] - o.c[1], dz = b.c[2] - o.c[2];
        return std::sqrt(dx * dx + dy * dy + dz * dz) < b.r + o.r + 1.0;
      });
      if (!overlaps) {
        balls.push_back(b);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Node n = g.node(i);
    for (const auto& b : balls) {
      const double dx = n[0] - b.c[0], dy = n[1] - b.c[1], dz = n[2] - b.c[2];
      if (dx * dx + dy * dy + dz * dz < b.r * b.r) m[i] = 0;
    }
  }
}

void paint_radial(Mask& m, const GridGeometry& g, const SceneRecipe& rc, Rng& rng) {
  const int count = uniform_int(rng, rc.count_min, rc.count_max);
  constexpr int harmonics = 5;
  for (int s = 0; s < count; ++s) {
    const double radius = uniform_real(rng, rc.size_min, rc.size_max);
    const double cy = uniform_real(rng, 0, g.extent(0) - 1), cx = uniform_real(rng, 0, g.extent(1) - 1);
    std::array<double, harmonics> amp{}, phase{};
    for (int k = 0; k < harmonics; ++k) {
      amp[static_cast<std::size_t>(k)] = uniform_real(rng, 0, 0.35 / (k + 1));
      phase[static_cast<std::size_t>(k)] = uniform_real(rng, 0, 2 * std::numbers::pi);
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      const Node n = g.node(i);
      const double dy = n[0] - cy, dx = n[1] - cx;
      const double theta = std::atan2(dy, dx);
      double r = 1.0;
      for (int k = 0; k < harmonics; ++k) {
        r += amp[static_cast<std::size_t>(k)] * std::cos((k + 1) * theta + phase[static_cast<std::size_t>(k)]);
      }
      r = std::max(0.2, r) * radius;
      if (dx * dx + dy * dy < r * r) m[i] = 0;
    }
  }
}

// Street grid: `count` blocks per axis separated by streets whose width is
// drawn from the size range; some blocks are left empty as plazas and some
// are split by an alley.
void paint_blocks(Mask& m, const GridGeometry& g, const SceneRecipe& rc, Rng& rng) {
  const int blocks = std::max(1, uniform_int(rng, rc.count_min, rc.count_max));
  auto cuts = [&](int extent) {
    std::vector<int> streets(static_cast<std::size_t>(blocks) + 1);
    int total = 0;
    for (auto& s : streets) {
      s = static_cast<int>(std::lround(uniform_real(rng, rc.size_min, rc.size_max)));
      total += s;
    }
    // Block spans [start, end) along the axis.
    std::vector<std::pair<int, int>> spans;
    const double block_len = static_cast<double>(extent - total) / blocks;
    double pos = 0.0;
    for (int b = 0; b < blocks; ++b) {
      pos += streets[static_cast<std::size_t>(b)];
      const int start = static_cast<int>(std::lround(pos));
      pos += block_len;
      const int end = static_cast<int>(std::lround(pos));
      spans.emplace_back(start, end);
    }
    return spans;
  };
  const auto rows = cuts(g.extent(0));
  const auto cols = cuts(g.extent(1));
  for (const auto& [r0, r1] : rows) {
    for (const auto& [c0, c1] : cols) {
      if (uniform_real(rng, 0, 1) < 0.12 || r1 - r0 < 2 || c1 - c0 < 2) continue;
      // Optional alley splitting the block in two.
      int alley_axis = -1, alley_at = 0, alley_w = 0;
      if (uniform_real(rng, 0, 1) < 0.25) {
        alley_axis = uniform_real(rng, 0, 1) < 0.5 ? 0 : 1;
        const int lo = alley_axis == 0 ? r0 : c0, hi = alley_axis == 0 ? r1 : c1;
        alley_w = std::max(1, static_cast<int>(std::lround(rc.size_min)));
        if (hi - lo > alley_w + 4) {
          alley_at = uniform_int(rng, lo + 2, hi - 2 - alley_w);
        } else {
          alley_axis = -1;
        }
      }
      for (int i = r0; i < r1; ++i) {
        for (int j = c0; j < c1; ++j) {
          const int along = alley_axis == 0 ? i : j;
          if (alley_axis >= 0 && along >= alley_at && along < alley_at + alley_w) continue;
          m[g.index({i, j, 0})] = 0;
        }
      }
    }
  }
}

void paint_primitives(Mask& m, const GridGeometry& g, const SceneRecipe& rc, Rng& rng) {
  const int count = uniform_int(rng, rc.count_min, rc.count_max);
  for (int s = 0; s < count; ++s) {
    const int kind = uniform_int(rng, 0, 3);
    const double size = uniform_real(rng, rc.size_min, rc.size_max);
    const std::array<double, 3> c{uniform_real(rng, 0, g.extent(0) - 1), uniform_real(rng, 0, g.extent(1) - 1),
                                  uniform_real(rng, 0, g.extent(2) - 1)};
    const Mat3 rot = random_rotation(rng);
    std::array<double, 3> half{uniform_real(rng, 0.5, 1.0) * size, uniform_real(rng, 0.5, 1.0) * size,
                               uniform_real(rng, 0.5, 1.0) * size};
    // Tetrahedron: perturbed regular vertices in the local frame.
    std::array<std::array<double, 3>, 4> tet{{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}};
    for (auto& v : tet) {
      for (auto& x : v) x *= size * uniform_real(rng, 0.6, 1.0);
    }
    auto inside = [&](const std::array<double, 3>& q) {
      switch (kind) {
        case 0: {  // cuboid
          return std::abs(q[0]) <= half[0] && std::abs(q[1]) <= half[1] && std::abs(q[2]) <= half[2];
        }
        case 1: {  // ellipsoid
          double s2 = 0.0;
          for (int a = 0; a < 3; ++a) s2 += (q[a] / half[a]) * (q[a] / half[a]);
          return s2 <= 1.0;
        }
        case 2: {  // cylinder along local z
          const double r = 0.8 * std::min(half[0], half[1]);
          return q[0] * q[0] + q[1] * q[1] <= r * r && std::abs(q[2]) <= half[2];
        }
        default: {  // tetrahedron
          auto vol = [](const std::array<double, 3>& a, const std::array<double, 3>& b, const std::array<double, 3>& c2,
                        const std::array<double, 3>& d) {
            const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
            const double vx = c2[0] - a[0], vy = c2[1] - a[1], vz = c2[2] - a[2];
            const double wx = d[0] - a[0], wy = d[1] - a[1], wz = d[2] - a[2];
            return ux * (vy * wz - vz * wy) - uy * (vx * wz - vz * wx) + uz * (vx * wy - vy * wx);
          };
          const double total = vol(tet[0], tet[1], tet[2], tet[3]);
          const double s0 = vol(q, tet[1], tet[2], tet[3]);
          const double s1 = vol(tet[0], q, tet[2], tet[3]);
          const double s2 = vol(tet[0], tet[1], q, tet[3]);
          const double s3 = vol(tet[0], tet[1], tet[2], q);
          auto same = [&](double v) { return total > 0 ? v >= 0 : v <= 0; };
          return same(s0) && same(s1) && same(s2) && same(s3);
        }
      }
    };
    const double reach = 1.8 * size + 1.0;
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor(c[a] - reach)));
      hi[a] = std::min(g.extent(a) - 1, static_cast<int>(std::ceil(c[a] + reach)));
    }
    for (int i = lo[0]; i <= hi[0]; ++i) {
      for (int j = lo[1]; j <= hi[1]; ++j) {
        for (int k = lo[2]; k <= hi[2]; ++k) {
          if (inside(to_local(rot, {i - c[0], j - c[1], k - c[2]}))) m[g.index({i, j, k})] = 0;
        }
      }
    }
  }
}

// Labels face-connected free components; returns labels (-1 for obstacles)
// and component sizes.
std::pair<std::vector<int>, std::vector<std::size_t>> label_components(const Mask& free, const GridGeometry& g) {
  std::vector<int> label(free.size(), -1);
  std::vector<std::size_t> sizes;
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < free.size(); ++s) {
    if (!free[s] || label[s] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    sizes.push_back(0);
    label[s] = id;
    queue.push_back(s);
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      ++sizes.back();
      const Node n = g.node(i);
      for (std::size_t a = 0; a < 3; ++a) {
        for (int d : {-1, 1}) {
          Node q = n;
          q[a] += d;
          if (!g.contains(q)) continue;
          const std::size_t j = g.index(q);
          if (free[j] && label[j] < 0) {
            label[j] = id;
            queue.push_back(j);
          }
        }
      }
    }
  }
  return {std::move(label), std::move(sizes)};
}

}  // namespace

std::vector<std::size_t> free_components(const Mask& free, const GridGeometry& geometry) {
  auto sizes = label_components(free, geometry).second;
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

Mask generate_scene(const SceneRecipe& recipe) {
  recipe.validate();
  const auto g = recipe.geometry();
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng(splitmix64(recipe.seed ^ splitmix64(attempt)));
    Mask m(g.size(), 1);
    switch (recipe.family) {
      case SceneFamily::disks: paint_disks(m, g, recipe, rng); break;
      case SceneFamily::radial: paint_radial(m, g, recipe, rng); break;
      case SceneFamily::blocks: paint_blocks(m, g, recipe, rng); break;
      case SceneFamily::primitives3d: paint_primitives(m, g, recipe, rng); break;
    }
    const auto [label, sizes] = label_components(m, g);
    if (sizes.empty()) continue;
    const int keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] && label[i] != keep) m[i] = 0;
    }
    const double free_fraction = static_cast<double>(sizes[static_cast<std::size_t>(keep)]) / static_cast<double>(m.size());
    const double obstacle_fraction = 1.0 - free_fraction;
    if (free_fraction >= 0.1 && obstacle_fraction >= recipe.obstacle_min && obstacle_fraction <= recipe.obstacle_max) {
      return m;
    }
  }
  throw Error(ErrorCode::generation_failure, "no " + to_string(recipe.family) +
                                                 " scene satisfied the recipe after 100 attempts");
}

}  // namespace vantage
