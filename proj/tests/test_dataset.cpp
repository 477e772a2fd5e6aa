#include <doctest.h>

#include <cstring>

#include "support.hpp"
#include "vantage/dataset.hpp"
#include "vantage/rfa.hpp"

using namespace vantage;
using namespace testsupport;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::io_error;
}

ScalarField random_float_field(const GridGeometry& g, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(g.size());
  for (auto& x : v) x = static_cast<float>(uniform_real(rng, -100.0, 100.0));
  return ScalarField(g, std::move(v));
}

}  // namespace

TEST_CASE("rfa round trip and layout") {
  TempDir dir("rfa");
  const std::array<int, 2> shape{128, 128};
  const std::array<double, 2> origin{-3.25, 1.5};
  const GridGeometry g(shape, 0.125, origin);
  const auto f = random_float_field(g, 1);
  write_rfa(f, dir.path / "f.rfa");
  const auto back = read_rfa(dir.path / "f.rfa");
  CHECK(back == f);
  CHECK(back.geometry() == g);

  const auto bytes = encode_rfa(ScalarField(GridGeometry::cube(64), 1.0));
  const std::string text(bytes.begin(), bytes.end());
  REQUIRE(text.rfind("RFA1\n", 0) == 0);
  const auto eol = text.find('\n', 5);
  const auto header = nlohmann::json::parse(text.substr(5, eol - 5));
  CHECK(header["shape"] == nlohmann::json::array({64, 64, 64}));
  CHECK(header["dtype"] == "f32le");
  CHECK(header["order"] == "row-major");
  CHECK(header["dx"] == 1.0);
  CHECK(header["origin"].size() == 3);
  CHECK(bytes.size() - (eol + 1) == 64u * 64u * 64u * 4u);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + eol + 1, 4);
  CHECK(first == 1.0f);
}

TEST_CASE("rfa rejects malformed input") {
  const auto good = encode_rfa(ScalarField(GridGeometry::square(4), 0.5));
  auto truncated = good;
  truncated.pop_back();
  CHECK(code_of([&] { decode_rfa(truncated); }) == ErrorCode::format_error);
  auto extra = good;
  extra.push_back(0);
  CHECK(code_of([&] { decode_rfa(extra); }) == ErrorCode::format_error);
  auto magic = good;
  magic[3] = '2';
  CHECK(code_of([&] { decode_rfa(magic); }) == ErrorCode::format_error);
  auto nan = good;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 4, &q, 4);
  CHECK(code_of([&] { decode_rfa(nan); }) == ErrorCode::format_error);
  const std::string bad_header = "RFA1\n{\"shape\":[4,4],\"dtype\":\"f64le\",\"order\":\"row-major\",\"dx\":1,\"origin\":[0,0]}\n";
  CHECK(code_of([&] { decode_rfa(std::vector<std::uint8_t>(bad_header.begin(), bad_header.end())); }) ==
        ErrorCode::format_error);
  CHECK(code_of([&] { read_rfa("/nonexistent/x.rfa"); }) == ErrorCode::io_error);
  CHECK(code_of([&] { encode_rfa(ScalarField(GridGeometry::square(4), 1e300)); }) == ErrorCode::format_error);
}

TEST_CASE("pgm preview") {
  TempDir dir("pgm");
  const auto f = random_float_field(GridGeometry::square(8), 2);
  write_pgm_preview(f, dir.path / "p.pgm");
  const auto img = load_mask(dir.path / "p.pgm");
  CHECK(img.shape == std::vector<int>{8, 8});
}

TEST_CASE("emit_pair examples") {
  const auto room = room_map(16);
  const auto full = observe_all(room, {Vantage{{8, 8, 0}}});
  const auto zero = emit_pair(room, full);
  CHECK(zero.target.max() == 0.0);
  CHECK(zero.target.min() == 0.0);
  CHECK(zero.meta.normalization == 0.0);

  const auto map = two_disk_map();
  const auto state = observe_all(map, {two_disk_x0()});
  const auto gain = exact_gain_field(map, state, GainMode::exploration);
  const auto pair = emit_pair(state, gain, PairMeta{"m", 0, 0, 7, 0.0});
  CHECK(pair.meta.normalization == gain.max());
  CHECK(pair.meta.step == 0);
  CHECK(pair.target.max() == 1.0);
  CHECK(pair.psi == state.psi_cum());
  CHECK(pair.boundary == state.boundary());
  for (std::size_t i = 0; i < gain.values.size(); ++i) {
    CHECK(pair.target[i] * pair.meta.normalization == doctest::Approx(gain.values[i]).epsilon(1e-12));
    CHECK(pair.target[i] >= 0.0);
    CHECK(pair.target[i] <= 1.0);
    if (pair.psi[i] <= 0.0) CHECK(pair.target[i] == 0.0);
  }
  CHECK_THROWS_AS(emit_pair(state, exact_gain_field(room, full, GainMode::exploration)), Error);
}

TEST_CASE("dataset generation") {
  TempDir a("ds_a"), b("ds_b");
  DatasetConfig cfg;
  cfg.recipes = {SceneRecipe::defaults(SceneFamily::disks, {32, 32}, 1),
                 SceneRecipe::defaults(SceneFamily::blocks, {32, 32}, 2)};
  cfg.episodes_per_map = 1;
  cfg.steps_per_episode = 3;
  cfg.seed = 99;
  const auto manifest = generate_dataset(cfg, a.path);
  CHECK(manifest["count"] == 6);
  CHECK(manifest["pairs"].size() == 6);
  CHECK(manifest["global_seed"] == 99);
  for (const auto& p : manifest["pairs"]) {
    const auto psi = read_rfa(a.path / p["psi"].get<std::string>());
    const auto target = read_rfa(a.path / p["target"].get<std::string>());
    const auto boundary = read_rfa(a.path / p["boundary"].get<std::string>());
    CHECK(psi.geometry() == target.geometry());
    CHECK(boundary.geometry() == target.geometry());
    for (std::size_t i = 0; i < psi.size(); ++i) {
      CHECK(target[i] >= 0.0);
      CHECK(target[i] <= 1.0);
      if (psi[i] <= 0.0) CHECK(target[i] == 0.0);
    }
  }
  const auto on_disk = nlohmann::json::parse(slurp(a.path / "manifest.json"));
  CHECK(on_disk["count"] == 6);

  cfg.workers = 2;
  generate_dataset(cfg, b.path);
  CHECK(directory_hash(a.path) == directory_hash(b.path));

  TempDir c("ds_c");
  cfg.seed = 100;
  generate_dataset(cfg, c.path);
  CHECK(directory_hash(a.path) != directory_hash(c.path));
}

TEST_CASE("dataset failures clean up") {
  TempDir dir("ds_fail");
  std::ofstream(dir.path / "pairs") << "a file where a directory should be";
  DatasetConfig cfg;
  cfg.recipes = {SceneRecipe::defaults(SceneFamily::disks, {32, 32}, 1)};
  CHECK(code_of([&] { generate_dataset(cfg, dir.path); }) == ErrorCode::io_error);
  CHECK(!std::filesystem::exists(dir.path / "manifest.json"));

  TempDir dir2("ds_fail2");
  DatasetConfig bad;
  bad.recipes = {SceneRecipe::defaults(SceneFamily::disks, {32, 32}, 1)};
  bad.recipes[0].obstacle_min = 0.97;
  bad.recipes[0].obstacle_max = 0.99;
  CHECK(code_of([&] { generate_dataset(bad, dir2.path); }) == ErrorCode::generation_failure);
  CHECK(!std::filesystem::exists(dir2.path / "manifest.json"));
  CHECK(!std::filesystem::exists(dir2.path / "pairs"));
  CHECK_THROWS_AS(generate_dataset(DatasetConfig{}, dir2.path), Error);
}
