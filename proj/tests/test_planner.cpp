#include <doctest.h>

#include <map>
#include <set>

#include "support.hpp"

using namespace vantage;
using namespace testsupport;

namespace {

GainField field_from(const GridGeometry& g, const std::vector<std::pair<Node, double>>& entries, bool all = false) {
  std::vector<double> v(g.size(), 0.0);
  Mask c(g.size(), all ? 1 : 0);
  for (const auto& [n, x] : entries) {
    v[g.index(n)] = x;
    c[g.index(n)] = 1;
  }
  return GainField{ScalarField(g, std::move(v)), std::move(c)};
}

// Recomputes every candidate's gain from scratch each step.
std::vector<Vantage> brute_greedy(const OccupancyMap& map, const Vantage& x0, const StopRule& stop) {
  const auto& g = map.geometry();
  auto state = observe_all(map, {x0});
  std::vector<Vantage> out{x0};
  std::set<std::size_t> visited{g.index(x0.node)};
  while (true) {
    if (residual(state.psi_cum(), map) < stop.delta_residual) break;
    if (state.boundary().max() < 1e-12) break;
    if (static_cast<int>(out.size()) >= stop.max_steps) break;
    double best = -1.0;
    std::size_t arg = 0;
    double best_d = 0.0;
    std::vector<double> gains(g.size(), -1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!map.is_free(i) || visited.count(i)) continue;
      gains[i] = exact_gain_at(map, state, Vantage{g.node(i)});
      best = std::max(best, gains[i]);
    }
    if (best < 0.0) break;
    const double norm = best / (static_cast<double>(state.seen_count()) * g.cell_volume());
    if (norm < stop.eps_gain) break;
    bool found = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (gains[i] < 0.0 || gains[i] < best - 1e-12 * std::abs(best)) continue;
      const Node n = g.node(i);
      const Node c = out.back().node;
      const double d = std::pow(n[0] - c[0], 2) + std::pow(n[1] - c[1], 2) + std::pow(n[2] - c[2], 2);
      if (!found || d < best_d) {
        found = true;
        best_d = d;
        arg = i;
      }
    }
    out.push_back(Vantage{g.node(arg)});
    visited.insert(arg);
    state = observe(map, state, out.back(), default_eps(g));
  }
  return out;
}

}  // namespace

TEST_CASE("select_next examples") {
  const auto g = GridGeometry::square(10);
  const Vantage current{{5, 5, 0}};
  CHECK(select_next(field_from(g, {{{1, 1, 0}, 3.0}, {{2, 2, 0}, 7.0}}), current).node == Node{2, 2, 0});
  CHECK(select_next(field_from(g, {{{5, 8, 0}, 4.0}, {{5, 0, 0}, 4.0}}), current).node == Node{5, 8, 0});
  CHECK(select_next(field_from(g, {{{0, 5, 0}, 4.0}, {{5, 8, 0}, 4.0 * (1 + 1e-13)}}), current).node ==
        Node{5, 8, 0});
  // Full tie: nearest candidate, then lowest index.
  CHECK(select_next(field_from(g, {}, true), current).node == Node{5, 5, 0});
  CHECK(select_next(field_from(g, {{{4, 5, 0}, 1.0}, {{5, 4, 0}, 1.0}, {{6, 5, 0}, 1.0}}), current).node ==
        Node{4, 5, 0});
  try {
    select_next(field_from(g, {}), current);
    FAIL("expected no_candidate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::no_candidate);
  }
}

TEST_CASE("stop rule validation") {
  CHECK_NOTHROW(StopRule{}.validate());
  CHECK_THROWS_AS((StopRule{-1.0, 1e-3, 10}.validate()), Error);
  CHECK_THROWS_AS((StopRule{1e-3, 1.5, 10}.validate()), Error);
  CHECK_THROWS_AS((StopRule{1e-3, 1e-3, 0}.validate()), Error);
}

TEST_CASE("convex room needs one vantage") {
  const auto map = room_map(24);
  ExactEstimator est(GainMode::surveillance);
  const auto trace = run_episode(map, est, Vantage{{5, 17, 0}}, StopRule{}, 0);
  CHECK(trace.steps.size() == 1);
  CHECK(trace.steps[0].residual == 0.0);
  CHECK(trace.stop == StopReason::residual_below_delta);
}

TEST_CASE("two-disk scene terminates quickly and matches brute force") {
  const auto map = two_disk_map();
  StopRule stop;
  ExactEstimator est(GainMode::surveillance);
  const auto trace = run_episode(map, est, two_disk_x0(), stop, 0);
  CHECK(trace.steps.back().residual < 1e-3);
  CHECK(trace.steps.size() <= 6);
  CHECK(trace.vantages() == brute_greedy(map, two_disk_x0(), stop));
}

TEST_CASE("exhaustive greedy equivalence on small maps") {
  Rng rng(5);
  for (int t = 0; t < 4; ++t) {
    const auto map = recipe_map(t % 2 ? SceneFamily::blocks : SceneFamily::disks, {24, 24}, 600 + t);
    const auto x0 = random_free(map, rng);
    const StopRule stop{1e-3, 1e-3, 12};
    ExactEstimator cached(GainMode::surveillance);
    ExactEstimator uncached(GainMode::surveillance, GainOptions{}, 0);
    const auto a = run_episode(map, cached, x0, stop, 1);
    CHECK(a.vantages() == brute_greedy(map, x0, stop));
    CHECK(run_episode(map, uncached, x0, stop, 1).vantages() == a.vantages());
  }
}

TEST_CASE("episode invariants") {
  Rng rng(13);
  for (int t = 0; t < 4; ++t) {
    const auto map = recipe_map(SceneFamily::blocks, {48, 48}, 700 + t);
    const auto x0 = random_free(map, rng);
    for (auto mode : {GainMode::surveillance, GainMode::exploration}) {
      ExactEstimator est(mode);
      const StopRule stop{0.0, 0.0, 15};
      const auto trace = run_episode(map, est, x0, stop, 3);
      CHECK(trace.steps.size() <= 15);
      std::set<std::size_t> seen;
      for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        const auto idx = map.geometry().index(trace.steps[k].vantage.node);
        CHECK(seen.insert(idx).second);
        CHECK(map.is_free(idx));
        if (k > 0) {
          CHECK(trace.steps[k].residual <= trace.steps[k - 1].residual);
          if (trace.steps[k].max_gain > 0.0) CHECK(trace.steps[k].residual < trace.steps[k - 1].residual);
          // Identity in node counts.
          CHECK(static_cast<double>(trace.steps[k - 1].unseen - trace.steps[k].unseen) * map.geometry().cell_volume() ==
                trace.steps[k].max_gain);
        }
      }
    }
  }
}

TEST_CASE("episodes are deterministic and stop reasons are recorded") {
  const auto map = recipe_map(SceneFamily::disks, {40, 40}, 21);
  Rng rng(2);
  const auto x0 = random_free(map, rng);
  RandomEstimator r1, r2;
  const auto a = run_episode(map, r1, x0, StopRule{0.0, 1e-3, 30}, 99);
  const auto b = run_episode(map, r2, x0, StopRule{0.0, 1e-3, 30}, 99);
  CHECK(a.vantages() == b.vantages());
  CHECK(a.residuals() == b.residuals());
  ExactEstimator e(GainMode::exploration);
  CHECK(run_episode(map, e, x0, StopRule{0.0, 0.0, 3}, 0).stop == StopReason::max_steps);
  CHECK(run_episode(map, e, x0, StopRule{0.5, 0.0, 50}, 0).stop == StopReason::gain_below_eps);
  const auto room = room_map(12);
  CHECK(run_episode(room, e, Vantage{{6, 6, 0}}, StopRule{0.0, 0.0, 5}, 0).stop == StopReason::no_shadow_boundary);
  CHECK_THROWS_AS(run_episode(map, e, Vantage{{-1, 0, 0}}, StopRule{}, 0), Error);
}

TEST_CASE("random estimator") {
  const auto map = recipe_map(SceneFamily::blocks, {32, 32}, 5);
  Rng rng(3);
  const auto state = observe_all(map, {random_free(map, rng)});
  const auto a = random_estimator(state, map, 42);
  CHECK(a.values == random_estimator(state, map, 42).values);
  CHECK(a.max() == 1.0);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] > 0.0) {
      ++ones;
      CHECK(state.seen(i));
    }
  }
  CHECK(ones == 1);
  CHECK_THROWS_AS(random_estimator(ExplorationState::empty(map.geometry()), map, 1), Error);

  SUBCASE("uniform over a ten-node visible set") {
    const auto g = GridGeometry::square(8);
    const OccupancyMap open(ScalarField(g, 4.0));
    std::vector<double> psi(g.size(), -1.0);
    for (std::size_t i = 0; i < 10; ++i) psi[i * 5 + 3] = 1.0;
    const auto s = accumulate(ExplorationState::empty(g), Vantage{{0, 3, 0}}, ScalarField(g, psi));
    std::map<std::size_t, int> hist;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const auto f = random_estimator(s, open, seed);
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (f.values[i] > 0.0) ++hist[i];
      }
    }
    CHECK(hist.size() == 10);
    double chi2 = 0.0;
    for (const auto& [i, c] : hist) {
      CHECK(psi[i] > 0.0);
      CHECK(std::abs(c - 1000) <= 100);
      chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    }
    CHECK(chi2 < 27.88);  // p = 0.001, 9 dof
  }
}

TEST_CASE("frequency map") {
  const auto g = GridGeometry::square(16);
  PlanTrace one{g, {StepRecord{Vantage{{4, 9, 0}}}}, StopReason::max_steps, std::nullopt};
  const auto f1 = frequency_map({one}, 1.5);
  CHECK(f1.max() == 1.0);
  CHECK(f1.at({4, 9, 0}) == 1.0);
  const auto f2 = frequency_map({one, one}, 1.5);
  CHECK(f2.max() == 2.0);
  CHECK(f2.at({4, 10, 0}) == doctest::Approx(2.0 * std::exp(-1.0 / (2 * 2.25))));
  PlanTrace other{GridGeometry::square(8), {StepRecord{}}, StopReason::max_steps, std::nullopt};
  CHECK_THROWS_AS(frequency_map({one, other}, 1.0), Error);
  CHECK_THROWS_AS(frequency_map({one}, 0.0), Error);
}

TEST_CASE("frequency hot spots lie in free space") {
  const auto map = recipe_map(SceneFamily::blocks, {32, 32}, 8);
  ExactEstimator est(GainMode::exploration);
  std::vector<PlanTrace> traces;
  Rng rng(77);
  for (int r = 0; r < 800; ++r) traces.push_back(run_episode(map, est, random_free(map, rng), StopRule{}, r));
  const auto f = frequency_map(traces, 1.0);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < f.size(); ++i) ranked.emplace_back(f[i], i);
  std::sort(ranked.rbegin(), ranked.rend());
  for (std::size_t k = 0; k < f.size() / 100; ++k) CHECK(map.is_free(ranked[k].second));
}

#ifdef MOCK_ESTIMATOR
TEST_CASE("external estimator protocol") {
  const auto map = recipe_map(SceneFamily::disks, {32, 32}, 4);
  Rng rng(1);
  const auto x0 = random_free(map, rng);
  TempDir dir("external");
  const std::string mock = MOCK_ESTIMATOR;
  {
    ExternalEstimator est(mock + " --mode boundary", dir.path);
    const auto trace = run_episode(map, est, x0, StopRule{1e-3, 1e-3, 10}, 0);
    CHECK(trace.steps.size() >= 2);
    for (std::size_t k = 1; k < trace.steps.size(); ++k) CHECK(trace.steps[k].residual <= trace.steps[k - 1].residual);
  }
  for (const std::string mode : {"fail", "garbage", "range", "shape"}) {
    ExternalEstimator est(mock + " --mode " + mode, dir.path);
    try {
      run_episode(map, est, x0, StopRule{}, 0);
      FAIL("expected estimator_error for " << mode);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::estimator_error);
    }
  }
  ExternalEstimator missing("/nonexistent/estimator", dir.path);
  CHECK_THROWS_AS(run_episode(map, missing, x0, StopRule{}, 0), Error);
}
#endif
