#include <doctest.h>

#include "support.hpp"

using namespace vantage;
using namespace testsupport;

namespace {

std::vector<double> to_vec(const ScalarField& f) { return {f.values().begin(), f.values().end()}; }

}  // namespace

TEST_CASE("gain at a visited vantage is zero") {
  const auto map = two_disk_map();
  const auto state = observe_all(map, {two_disk_x0(), Vantage{{10, 50, 0}}});
  CHECK(exact_gain_at(map, state, two_disk_x0()) == 0.0);
  CHECK(exact_gain_at(map, state, Vantage{{10, 50, 0}}) == 0.0);
}

TEST_CASE("empty map has no gain after the first view") {
  const OccupancyMap map(ScalarField(GridGeometry::square(20), 5.0));
  const auto state = observe_all(map, {Vantage{{3, 4, 0}}});
  for (const Node x : {Node{0, 0, 0}, Node{19, 19, 0}, Node{10, 2, 0}}) {
    CHECK(exact_gain_at(map, state, Vantage{x}) == 0.0);
  }
  const auto field = exact_gain_field(map, state, GainMode::surveillance);
  CHECK(field.max() == 0.0);
}

TEST_CASE("gain matches set-union recount") {
  const auto map = two_disk_map();
  const auto state = observe_all(map, {two_disk_x0()});
  const auto psi0 = visibility_field(map, two_disk_x0());
  for (const Node xn : {Node{32, 58, 0}, Node{30, 40, 0}, Node{5, 60, 0}}) {
    const auto psi = visibility_field(map, Vantage{xn});
    std::size_t uni = 0, before = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      uni += psi[i] > 0.0 || psi0[i] > 0.0;
      before += psi0[i] > 0.0;
    }
    CHECK(exact_gain_at(map, state, Vantage{xn}) == static_cast<double>(uni - before));
    CHECK(exact_gain_count(map, state, Vantage{xn}) == uni - before);
  }
  const std::array<int, 2> shape{16, 16};
  const OccupancyMap scaled(ScalarField(GridGeometry(shape, 0.5), 1.0));
  const auto empty = ExplorationState::empty(scaled.geometry());
  CHECK(exact_gain_at(scaled, empty, Vantage{{3, 3, 0}}) == doctest::Approx(256 * 0.25));
  CHECK_THROWS_AS(exact_gain_at(map, state, Vantage{{22, 28, 0}}), Error);
}

TEST_CASE("field equals the node-by-node loop") {
  Rng rng(31);
  for (int t = 0; t < 4; ++t) {
    const auto map = recipe_map(t % 2 ? SceneFamily::blocks : SceneFamily::disks, {32, 32}, 400 + t);
    const auto state = observe_all(map, {random_free(map, rng), random_free(map, rng)});
    for (auto mode : {GainMode::surveillance, GainMode::exploration}) {
      const auto field = exact_gain_field(map, state, mode);
      CHECK(to_vec(field.values) == naive_gain_loop(map, state, mode));
      const auto mask = candidate_mask(map, state, mode);
      CHECK(field.candidates == mask);
      for (std::size_t i = 0; i < mask.size(); ++i) {
        CHECK(field.values[i] >= 0.0);
        if (!mask[i]) CHECK(field.values[i] == 0.0);
        if (mode == GainMode::exploration && !state.seen(i)) CHECK(field.values[i] == 0.0);
        CHECK(field.values[i] <= static_cast<double>(unseen_count(state.psi_cum(), map)));
      }
    }
  }
}

TEST_CASE("field is independent of worker count and the cache agrees") {
  const auto map = recipe_map(SceneFamily::blocks, {40, 40}, 9);
  Rng rng(6);
  const auto state = observe_all(map, {random_free(map, rng)});
  const VisibilityCache cache(map);
  for (auto mode : {GainMode::surveillance, GainMode::exploration}) {
    const auto one = exact_gain_field(map, state, mode, GainOptions{1});
    for (unsigned w : {2u, 3u, 4u}) CHECK(exact_gain_field(map, state, mode, GainOptions{w}).values == one.values);
    CHECK(cache.gain_field(state, mode).values == one.values);
    CHECK(cache.gain_field(state, mode, 3).values == one.values);
    CHECK(cache.gain_field(state, mode).candidates == one.candidates);
  }
}

TEST_CASE("argmax lies in the occluded pocket") {
  const auto map = two_disk_map();
  const auto state = observe_all(map, {two_disk_x0()});
  const auto field = exact_gain_field(map, state, GainMode::surveillance);
  const auto best = select_next(field, two_disk_x0());
  // Pocket: beyond both disks, in the row band between their centres.
  CHECK(best.node[1] > 44 + 7);
  CHECK(best.node[0] > 22);
  CHECK(best.node[0] < 44);
}

TEST_CASE("zero fixed point and gain-residual identity") {
  const auto room = room_map(16);
  const auto full = observe_all(room, {Vantage{{8, 8, 0}}});
  CHECK(residual(full.psi_cum(), room) == 0.0);
  CHECK(exact_gain_field(room, full, GainMode::surveillance).max() == 0.0);

  const auto map = recipe_map(SceneFamily::disks, {32, 32}, 77);
  Rng rng(1);
  auto state = observe_all(map, {random_free(map, rng)});
  for (int k = 0; k < 5; ++k) {
    const auto x = random_free(map, rng);
    const std::size_t g = exact_gain_count(map, state, x);
    const std::size_t before = unseen_count(state.psi_cum(), map);
    state = observe(map, state, x, 3.0);
    CHECK(before - unseen_count(state.psi_cum(), map) == g);
  }
}

TEST_CASE("three-dimensional gain field") {
  const auto map = recipe_map(SceneFamily::primitives3d, {12, 12, 12}, 2);
  Rng rng(4);
  const auto state = observe_all(map, {random_free(map, rng)});
  const auto field = exact_gain_field(map, state, GainMode::exploration, GainOptions{2});
  CHECK(to_vec(field.values) == naive_gain_loop(map, state, GainMode::exploration));
}
