#include "vantage/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "vantage/dataset.hpp"
#include "vantage/gain.hpp"
#include "vantage/rfa.hpp"
#include "vantage/scenes.hpp"

namespace vantage::cli {

namespace {

struct Options {
  // map source
  std::string map_path;
  std::string polygon_path;
  std::string recipe;
  std::string shape = "64x64";
  double threshold = 127.0;
  double dx = 1.0;
  std::uint64_t seed = 0;
  // planning
  std::string estimator = "exact";
  double eps_gain = 1e-3;
  double delta_res = 1e-3;
  int max_steps = 100;
  unsigned workers = 1;
  std::string x0;
  std::string out_dir = ".";
  int snapshot_every = 0;
  bool timing = false;
  bool pgm = false;
  // gainmap
  std::string vantages;
  std::string mode = "surveillance";
  // dataset
  int maps = 1;
  int episodes = 1;
  int steps = 8;
  // frequency
  int runs = 10;
  double sigma = 2.0;
  // gallery
  bool comb = false;
  int convex = 0;
};

[[noreturn]] void usage(const std::string& what) { throw CLI::ValidationError(what); }

std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::vector<int> v;
  std::string token;
  for (char c : text + ",") {
    if (c == ',' || c == 'x' || c == 'X') {
      if (token.empty()) usage("malformed " + what + " '" + text + "'");
      std::size_t used = 0;
      int n = 0;
      try {
        n = std::stoi(token, &used);
      } catch (const std::exception&) {
        usage("malformed " + what + " '" + text + "'");
      }
      if (used != token.size()) usage("malformed " + what + " '" + text + "'");
      v.push_back(n);
      token.clear();
    } else if (c != ' ') {
      token += c;
    }
  }
  return v;
}

Vantage parse_vantage(const std::string& text, const GridGeometry& g) {
  const auto v = parse_ints(text, "vantage");
  if (static_cast<int>(v.size()) != g.dim()) usage("vantage '" + text + "' does not match the grid dimension");
  Vantage x;
  for (std::size_t a = 0; a < v.size(); ++a) x.node[a] = v[a];
  return x;
}

std::vector<Vantage> parse_vantage_list(const std::string& text, const GridGeometry& g) {
  std::vector<Vantage> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(parse_vantage(item, g));
  }
  return out;
}

nlohmann::ordered_json node_json(const Vantage& v, const GridGeometry& g) {
  auto arr = nlohmann::ordered_json::array();
  for (int a = 0; a < g.dim(); ++a) arr.push_back(v.node[static_cast<std::size_t>(a)]);
  return arr;
}

struct LoadedMap {
  OccupancyMap map;
  nlohmann::ordered_json source;
  std::optional<PolygonGallery> polygon;
};

GridGeometry polygon_geometry(const PolygonGallery& poly, double dx) {
  double xmin = poly.outer()[0][0], xmax = xmin, ymin = poly.outer()[0][1], ymax = ymin;
  for (const auto& p : poly.outer()) {
    xmin = std::min(xmin, p[0]);
    xmax = std::max(xmax, p[0]);
    ymin = std::min(ymin, p[1]);
    ymax = std::max(ymax, p[1]);
  }
  const std::array<int, 2> shape{static_cast<int>(std::ceil((ymax - ymin) / dx)) + 7,
                                 static_cast<int>(std::ceil((xmax - xmin) / dx)) + 7};
  const std::array<double, 2> origin{ymin - 3 * dx, xmin - 3 * dx};
  return GridGeometry(shape, dx, origin);
}

SceneRecipe recipe_from_options(const Options& o) {
  SceneRecipe r;
  if (o.recipe.size() > 5 && o.recipe.ends_with(".json")) {
    std::ifstream in(o.recipe);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + o.recipe);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::format_error, "recipe file is not valid JSON");
    r = SceneRecipe::from_json(j);
  } else {
    SceneFamily family;
    try {
      family = scene_family_from_string(o.recipe);
    } catch (const Error& e) {
      usage(e.what());
    }
    r = SceneRecipe::defaults(family, parse_ints(o.shape, "shape"), o.seed);
    r.dx = o.dx;
  }
  r.seed = o.seed;
  return r;
}

int count_sources(const Options& o) {
  return static_cast<int>(!o.map_path.empty()) + static_cast<int>(!o.polygon_path.empty()) +
         static_cast<int>(!o.recipe.empty());
}

LoadedMap load_map(const Options& o) {
  if (count_sources(o) != 1) usage("exactly one of --map, --polygon, --recipe is required");
  if (!o.map_path.empty()) {
    const auto img = load_mask(o.map_path, o.threshold);
    const GridGeometry g(img.shape, o.dx);
    nlohmann::ordered_json src{{"kind", "image"}, {"path", o.map_path}, {"threshold", o.threshold}};
    return {signed_distance(img.free, g), src, std::nullopt};
  }
  if (!o.polygon_path.empty()) {
    auto poly = PolygonGallery::load(o.polygon_path);
    const auto g = polygon_geometry(poly, o.dx);
    nlohmann::ordered_json src{{"kind", "polygon"}, {"path", o.polygon_path}};
    return {signed_distance(rasterize_gallery(poly, g), g), src, poly};
  }
  const auto recipe = recipe_from_options(o);
  nlohmann::ordered_json src{{"kind", "recipe"}, {"recipe", recipe.to_json()}};
  return {signed_distance(generate_scene(recipe), recipe.geometry()), src, std::nullopt};
}

Vantage random_free_node(const OccupancyMap& map, std::uint64_t seed) {
  std::vector<std::size_t> free_nodes;
  for (std::size_t i = 0; i < map.geometry().size(); ++i) {
    if (map.is_free(i)) free_nodes.push_back(i);
  }
  Rng rng(splitmix64(seed));
  return Vantage{map.geometry().node(free_nodes[uniform_index(rng, free_nodes.size())])};
}

Vantage nearest_free_node(const OccupancyMap& map, const Point2& xy) {
  const auto& g = map.geometry();
  std::size_t best = g.size();
  double best_d = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!map.is_free(i)) continue;
    const Point w = g.world(g.node(i));
    const double d = (w[1] - xy[0]) * (w[1] - xy[0]) + (w[0] - xy[1]) * (w[0] - xy[1]);
    if (best == g.size() || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  return Vantage{g.node(best)};
}

Vantage initial_vantage(const Options& o, const OccupancyMap& map) {
  if (o.x0.empty()) return random_free_node(map, o.seed);
  const auto x = parse_vantage(o.x0, map.geometry());
  if (!map.geometry().contains(x.node)) usage("--x0 lies outside the grid");
  return x;
}

StopRule stop_rule(const Options& o) {
  StopRule s{o.eps_gain, o.delta_res, o.max_steps};
  try {
    s.validate();
  } catch (const Error& e) {
    usage(e.what());
  }
  return s;
}

nlohmann::ordered_json base_config(const std::string& command, const Options& o, const LoadedMap& lm) {
  nlohmann::ordered_json c;
  c["command"] = command;
  c["seed"] = o.seed;
  c["source"] = lm.source;
  c["shape"] = lm.map.geometry().shape();
  c["dx"] = lm.map.geometry().dx();
  return c;
}

void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::io_error, "short write to " + path.string());
}

void write_field(const ScalarField& f, const std::filesystem::path& path, bool pgm) {
  write_rfa(f, path);
  if (pgm) {
    auto preview = path;
    preview.replace_extension(".pgm");
    write_pgm_preview(f, preview);
  }
}

std::filesystem::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir + ": " + ec.message());
  return dir;
}

int plan(const std::string& command, const Options& o, std::ostream& out) {
  const GainMode mode = command == "survey" ? GainMode::surveillance : GainMode::exploration;
  if (mode == GainMode::surveillance && o.estimator.starts_with("external:")) {
    usage("survey accepts --estimator exact or random");
  }
  const auto stop = stop_rule(o);
  auto lm = load_map(o);
  const auto dir = ensure_dir(o.out_dir);
  const Vantage x0 = initial_vantage(o, lm.map);
  GainOptions gopts;
  gopts.workers = o.workers;
  std::unique_ptr<GainEstimator> estimator;
  try {
    estimator = make_estimator(o.estimator, mode, gopts, dir / "exchange");
  } catch (const Error& e) {
    usage(e.what());
  }

  EpisodeOptions eopts;
  eopts.record_timing = o.timing;
  std::optional<ExactEstimator> snap_gain;
  if (o.snapshot_every > 0) {
    ensure_dir((dir / "snapshots").string());
    auto* exact = dynamic_cast<ExactEstimator*>(estimator.get());
    if (!exact) snap_gain.emplace(mode, gopts);
    eopts.on_step = [&, exact](const ExplorationState& state) {
      if (state.k() % o.snapshot_every != 0) return;
      char stem[32];
      std::snprintf(stem, sizeof stem, "k%04d", state.k());
      const auto base = dir / "snapshots";
      write_field(state.psi_cum(), base / (std::string(stem) + "_psi.rfa"), o.pgm);
      write_field(state.boundary(), base / (std::string(stem) + "_boundary.rfa"), o.pgm);
      const auto gain = exact ? exact->field(lm.map, state) : snap_gain->field(lm.map, state);
      write_field(gain.values, base / (std::string(stem) + "_gain.rfa"), o.pgm);
    };
  }
  const auto trace = run_episode(lm.map, *estimator, x0, stop, o.seed, eopts);

  auto config = base_config(command, o, lm);
  config["estimator"] = o.estimator;
  config["mode"] = mode == GainMode::surveillance ? "surveillance" : "exploration";
  config["x0"] = node_json(x0, lm.map.geometry());
  config["eps_gain"] = o.eps_gain;
  config["delta_res"] = o.delta_res;
  config["max_steps"] = o.max_steps;
  config["snapshot_every"] = o.snapshot_every;
  write_json(trace_to_json(trace, config), dir / "trace.json");
  out << command << ": " << trace.steps.size() << " vantage points, residual " << trace.steps.back().residual
      << ", stop " << to_string(trace.stop) << "\n";
  return kOk;
}

int gainmap(const Options& o, std::ostream& out) {
  GainMode mode;
  if (o.mode == "surveillance") {
    mode = GainMode::surveillance;
  } else if (o.mode == "exploration") {
    mode = GainMode::exploration;
  } else {
    usage("--mode must be surveillance or exploration");
  }
  auto lm = load_map(o);
  const auto& g = lm.map.geometry();
  const auto vantages = parse_vantage_list(o.vantages, g);
  const auto dir = ensure_dir(o.out_dir);
  auto state = ExplorationState::empty(g);
  const double eps = default_eps(g);
  for (const auto& v : vantages) state = observe(lm.map, state, v, eps);
  GainOptions gopts;
  gopts.workers = o.workers;
  const auto gain = exact_gain_field(lm.map, state, mode, gopts);
  write_field(gain.values, dir / "gain.rfa", o.pgm);
  if (!vantages.empty()) {
    write_field(state.psi_cum(), dir / "psi.rfa", o.pgm);
    write_field(state.boundary(), dir / "boundary.rfa", o.pgm);
  }
  auto config = base_config("gainmap", o, lm);
  config["mode"] = o.mode;
  auto list = nlohmann::ordered_json::array();
  for (const auto& v : vantages) list.push_back(node_json(v, g));
  config["vantages"] = list;
  nlohmann::ordered_json summary;
  summary["config"] = config;
  summary["max_gain"] = gain.max();
  if (gain.candidate_count() > 0) {
    const Vantage current = vantages.empty() ? Vantage{} : vantages.back();
    summary["argmax"] = node_json(select_next(gain, current), g);
  }
  summary["residual"] = vantages.empty() ? 1.0 : residual(state.psi_cum(), lm.map);
  write_json(summary, dir / "gainmap.json");
  out << "gainmap: max gain " << gain.max() << "\n";
  return kOk;
}

int dataset(const Options& o, std::ostream& out) {
  if (o.recipe.empty()) usage("dataset requires --recipe");
  if (!o.map_path.empty() || !o.polygon_path.empty()) usage("dataset builds maps from --recipe only");
  if (o.maps < 1 || o.episodes < 1 || o.steps < 1) usage("--maps, --episodes and --steps must be positive");
  DatasetConfig cfg;
  const auto recipe = recipe_from_options(o);
  cfg.recipes.assign(static_cast<std::size_t>(o.maps), recipe);
  cfg.episodes_per_map = o.episodes;
  cfg.steps_per_episode = o.steps;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  const auto manifest = generate_dataset(cfg, ensure_dir(o.out_dir));
  out << "dataset: " << manifest["count"].get<std::size_t>() << " pairs in " << o.out_dir << "\n";
  return kOk;
}

int frequency(const Options& o, std::ostream& out) {
  if (o.runs < 1) usage("--runs must be positive");
  if (!(o.sigma > 0.0)) usage("--sigma must be positive");
  const auto stop = stop_rule(o);
  auto lm = load_map(o);
  const auto dir = ensure_dir(o.out_dir);
  GainOptions gopts;
  gopts.workers = o.workers;
  std::unique_ptr<GainEstimator> estimator;
  try {
    estimator = make_estimator(o.estimator, GainMode::exploration, gopts, dir / "exchange");
  } catch (const Error& e) {
    usage(e.what());
  }
  std::vector<PlanTrace> traces;
  auto runs = nlohmann::ordered_json::array();
  for (int r = 0; r < o.runs; ++r) {
    const std::uint64_t run_seed = splitmix64(o.seed + static_cast<std::uint64_t>(r));
    const Vantage x0 = random_free_node(lm.map, run_seed);
    traces.push_back(run_episode(lm.map, *estimator, x0, stop, run_seed));
    auto v = nlohmann::ordered_json::array();
    for (const auto& s : traces.back().steps) v.push_back(node_json(s.vantage, lm.map.geometry()));
    runs.push_back({{"seed", run_seed}, {"vantages", v}, {"stop_reason", to_string(traces.back().stop)}});
  }
  const auto freq = frequency_map(traces, o.sigma);
  write_field(freq, dir / "frequency.rfa", o.pgm);
  auto config = base_config("frequency", o, lm);
  config["estimator"] = o.estimator;
  config["runs"] = o.runs;
  config["sigma"] = o.sigma;
  config["eps_gain"] = o.eps_gain;
  config["delta_res"] = o.delta_res;
  config["max_steps"] = o.max_steps;
  nlohmann::ordered_json doc;
  doc["config"] = config;
  doc["runs"] = runs;
  write_json(doc, dir / "frequency.json");
  out << "frequency: " << o.runs << " runs, peak " << freq.max() << "\n";
  return kOk;
}

int gallery(const Options& o, std::ostream& out) {
  const int chosen = static_cast<int>(!o.polygon_path.empty()) + static_cast<int>(o.comb) + static_cast<int>(o.convex > 0);
  if (chosen != 1) usage("gallery needs exactly one of --polygon, --comb, --convex N");
  std::optional<PolygonGallery> poly;
  GridGeometry g;
  if (o.comb) {
    poly = comb_gallery();
    g = comb_geometry();
  } else if (o.convex > 0) {
    if (o.convex < 3) usage("--convex needs at least 3 sides");
    poly = regular_polygon(o.convex, {32.0, 32.0}, 26.0);
    g = GridGeometry::square(64, 1.0);
  } else {
    poly = PolygonGallery::load(o.polygon_path);
    g = polygon_geometry(*poly, o.dx);
  }
  const auto map = signed_distance(rasterize_gallery(*poly, g), g);
  const auto bounds = gallery_bounds(*poly);
  const auto stop = stop_rule(o);
  const Vantage x0 = o.x0.empty() ? nearest_free_node(map, poly->centroid()) : parse_vantage(o.x0, g);
  GainOptions gopts;
  gopts.workers = o.workers;
  ExactEstimator estimator(GainMode::surveillance, gopts);
  const auto trace = run_episode(map, estimator, x0, stop, o.seed);

  out << "n=" << bounds.n << " h=" << bounds.h << " reflex=" << bounds.reflex << " chvatal=" << bounds.chvatal
      << " frontier=" << bounds.frontier << " greedy=" << trace.steps.size()
      << " residual=" << trace.steps.back().residual << "\n";

  if (!o.out_dir.empty()) {
    const auto dir = ensure_dir(o.out_dir);
    nlohmann::ordered_json config;
    config["command"] = "gallery";
    config["seed"] = o.seed;
    config["polygon"] = poly->to_json();
    config["shape"] = g.shape();
    config["dx"] = g.dx();
    config["x0"] = node_json(x0, g);
    config["eps_gain"] = o.eps_gain;
    config["delta_res"] = o.delta_res;
    config["max_steps"] = o.max_steps;
    auto doc = trace_to_json(trace, config);
    doc["bounds"] = {{"n", bounds.n}, {"h", bounds.h}, {"reflex", bounds.reflex}, {"chvatal", bounds.chvatal},
                     {"frontier", bounds.frontier}, {"greedy", trace.steps.size()}};
    write_json(doc, dir / "gallery.json");
  }
  return kOk;
}

void add_map_flags(CLI::App* sub, Options& o) {
  sub->add_option("--map", o.map_path, "occupancy image (PGM or PNG); bright pixels are obstacles");
  sub->add_option("--polygon", o.polygon_path, "polygon gallery JSON");
  sub->add_option("--recipe", o.recipe, "scene family (radial|disks|blocks|primitives3d) or recipe JSON file");
  sub->add_option("--shape", o.shape, "grid shape for --recipe, e.g. 64x64 or 32x32x32");
  sub->add_option("--threshold", o.threshold, "obstacle threshold for --map on a 0..255 scale");
  sub->add_option("--dx", o.dx, "grid spacing")->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "random seed");
}

void add_plan_flags(CLI::App* sub, Options& o) {
  sub->add_option("--estimator", o.estimator, "exact | random | external:<command>");
  sub->add_option("--eps-gain", o.eps_gain, "stop when the normalised max gain drops below this");
  sub->add_option("--delta-res", o.delta_res, "stop when the residual drops below this");
  sub->add_option("--max-steps", o.max_steps, "maximum number of vantage points");
  sub->add_option("--x0", o.x0, "initial vantage node, e.g. 10,20");
  sub->add_option("--snapshot-every", o.snapshot_every, "write psi/boundary/gain RFA every N steps");
  sub->add_flag("--timing", o.timing, "record per-step wall time in the trace");
}

void add_common_flags(CLI::App* sub, Options& o) {
  sub->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  sub->add_option("--out-dir", o.out_dir, "output directory");
  sub->add_flag("--pgm", o.pgm, "also write min-max scaled PGM previews of fields");
}

}  // namespace

nlohmann::ordered_json trace_to_json(const PlanTrace& trace, const nlohmann::ordered_json& config) {
  auto vantages = nlohmann::ordered_json::array();
  auto residuals = nlohmann::ordered_json::array();
  auto unseen = nlohmann::ordered_json::array();
  auto gains = nlohmann::ordered_json::array();
  auto normalized = nlohmann::ordered_json::array();
  auto wall = nlohmann::ordered_json::array();
  for (const auto& s : trace.steps) {
    vantages.push_back(node_json(s.vantage, trace.geometry));
    residuals.push_back(s.residual);
    unseen.push_back(s.unseen);
    gains.push_back(s.max_gain);
    normalized.push_back(s.normalized_max_gain);
    wall.push_back(s.wall_ms);
  }
  nlohmann::ordered_json j;
  j["config"] = config;
  j["vantages"] = std::move(vantages);
  j["residuals"] = std::move(residuals);
  j["unseen"] = std::move(unseen);
  j["max_gains"] = std::move(gains);
  j["normalized_max_gains"] = std::move(normalized);
  j["stop_reason"] = to_string(trace.stop);
  j["final_max_gain"] = trace.final_max_gain ? nlohmann::ordered_json(*trace.final_max_gain) : nlohmann::ordered_json();
  j["wall_ms"] = std::move(wall);
  return j;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Visibility-based surveillance and exploration planner", "vantage"};
  app.require_subcommand(1);
  Options o;

  auto* survey = app.add_subcommand("survey", "greedy coverage of a known map");
  add_map_flags(survey, o);
  add_plan_flags(survey, o);
  add_common_flags(survey, o);

  auto* explore = app.add_subcommand("explore", "greedy exploration of an unknown map");
  add_map_flags(explore, o);
  add_plan_flags(explore, o);
  add_common_flags(explore, o);

  auto* gain = app.add_subcommand("gainmap", "exact gain field for a list of vantage points");
  add_map_flags(gain, o);
  add_common_flags(gain, o);
  gain->add_option("--vantages", o.vantages, "semicolon-separated nodes, e.g. '10,20;30,5'");
  gain->add_option("--mode", o.mode, "surveillance | exploration");

  auto* data = app.add_subcommand("dataset", "generate training pairs from exact-greedy episodes");
  add_map_flags(data, o);
  add_common_flags(data, o);
  data->add_option("--maps", o.maps, "number of maps");
  data->add_option("--episodes", o.episodes, "episodes per map");
  data->add_option("--steps", o.steps, "steps per episode");

  auto* freq = app.add_subcommand("frequency", "aggregate vantage points of many runs into a frequency map");
  add_map_flags(freq, o);
  add_plan_flags(freq, o);
  add_common_flags(freq, o);
  freq->add_option("--runs", o.runs, "number of episodes");
  freq->add_option("--sigma", o.sigma, "Gaussian width in world units");

  auto* gal = app.add_subcommand("gallery", "art-gallery bounds next to the greedy vantage count");
  gal->add_option("--polygon", o.polygon_path, "polygon gallery JSON");
  gal->add_flag("--comb", o.comb, "built-in comb gallery (n=58, r=19)");
  gal->add_option("--convex", o.convex, "built-in regular convex polygon with N sides");
  gal->add_option("--dx", o.dx, "grid spacing")->check(CLI::PositiveNumber);
  gal->add_option("--seed", o.seed, "random seed");
  gal->add_option("--eps-gain", o.eps_gain, "stop when the normalised max gain drops below this");
  gal->add_option("--delta-res", o.delta_res, "stop when the residual drops below this");
  gal->add_option("--max-steps", o.max_steps, "maximum number of vantage points");
  gal->add_option("--x0", o.x0, "initial vantage node");
  gal->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  o.out_dir = ".";
  gal->add_option("--out-dir", o.out_dir, "write gallery.json here");

  std::vector<std::string> argv_storage{"vantage"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (survey->parsed()) return plan("survey", o, out);
    if (explore->parsed()) return plan("explore", o, out);
    if (gain->parsed()) return gainmap(o, out);
    if (data->parsed()) return dataset(o, out);
    if (freq->parsed()) return frequency(o, out);
    if (gal->parsed()) return gallery(o, out);
    return kUsageError;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  } catch (const vantage::Error& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace vantage::cli
