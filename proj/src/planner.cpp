#include "vantage/planner.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "vantage/rfa.hpp"

namespace vantage {

GainField ExactEstimator::estimate(const OccupancyMap& map, const ExplorationState& state, Rng&) {
  return field(map, state);
}

GainField ExactEstimator::field(const OccupancyMap& map, const ExplorationState& state) {
  if (VisibilityCache::footprint(map) > cache_limit_) {
    return exact_gain_field(map, state, mode_, options_);
  }
  if (!cache_ || !(cache_->map().phi() == map.phi()) || cache_->method() != options_.method) {
    cache_.emplace(map, options_);
  }
  return cache_->gain_field(state, mode_, options_.workers);
}

double ExactEstimator::normalize(double raw_max, const OccupancyMap& map, const ExplorationState& state) const {
  const double seen = static_cast<double>(state.seen_count()) * map.geometry().cell_volume();
  return seen > 0.0 ? raw_max / seen : raw_max;
}

namespace {

std::vector<std::size_t> visible_nodes(const ExplorationState& state) {
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < state.psi_cum().size(); ++i) {
    if (state.seen(i)) nodes.push_back(i);
  }
  return nodes;
}

GainField single_node_field(const ExplorationState& state, std::size_t chosen) {
  const auto& g = state.geometry();
  std::vector<double> values(g.size(), 0.0);
  values[chosen] = 1.0;
  Mask candidates(g.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = state.seen(i);
  return GainField{ScalarField(g, std::move(values)), std::move(candidates)};
}

}  // namespace

GainField RandomEstimator::estimate(const OccupancyMap& map, const ExplorationState& state, Rng& rng) {
  if (!(state.geometry() == map.geometry())) {
    throw Error(ErrorCode::invalid_argument, "state geometry does not match map");
  }
  const auto nodes = visible_nodes(state);
  const auto& g = state.geometry();
  std::vector<std::uint8_t> visited(g.size(), 0);
  for (const auto& v : state.vantages()) visited[g.index(v.node)] = 1;
  const auto fresh = static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [&](std::size_t i) { return !visited[i]; }));
  if (fresh == 0) throw Error(ErrorCode::no_candidate, "every visible node has been used as a vantage");
  for (;;) {
    const std::size_t pick = nodes[uniform_index(rng, nodes.size())];
    if (!visited[pick]) return single_node_field(state, pick);
  }
}

GainField random_estimator(const ExplorationState& state, const OccupancyMap& map, std::uint64_t seed) {
  if (!(state.geometry() == map.geometry())) {
    throw Error(ErrorCode::invalid_argument, "state geometry does not match map");
  }
  const auto nodes = visible_nodes(state);
  if (nodes.empty()) throw Error(ErrorCode::no_candidate, "visible region is empty");
  Rng rng(seed);
  return single_node_field(state, nodes[uniform_index(rng, nodes.size())]);
}

ExternalEstimator::ExternalEstimator(std::string command, std::filesystem::path exchange_dir)
    : command_(std::move(command)), dir_(std::move(exchange_dir)) {
  if (command_.empty()) throw Error(ErrorCode::invalid_argument, "external estimator needs a command");
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

}  // namespace

GainField ExternalEstimator::estimate(const OccupancyMap& map, const ExplorationState& state, Rng&) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::estimator_error, "cannot create exchange directory " + dir_.string());
  const auto psi_path = dir_ / "psi.rfa";
  const auto boundary_path = dir_ / "boundary.rfa";
  const auto out_path = dir_ / "gain.rfa";
  std::filesystem::remove(out_path, ec);
  write_rfa(state.psi_cum(), psi_path);
  write_rfa(state.boundary(), boundary_path);

  const std::string cmd = command_ + " --psi " + shell_quote(psi_path.string()) + " --boundary " +
                          shell_quote(boundary_path.string()) + " --out " + shell_quote(out_path.string());
  const int status = std::system(cmd.c_str());
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(ErrorCode::estimator_error,
                "command failed (status " + std::to_string(status) + "): " + cmd);
  }
  ScalarField raw;
  try {
    raw = read_rfa(out_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::estimator_error, std::string("unreadable estimator output: ") + e.what());
  }
  if (raw.geometry().shape() != map.geometry().shape()) {
    throw Error(ErrorCode::estimator_error, "estimator output shape does not match the map");
  }
  std::vector<double> values(raw.size());
  Mask candidates(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0.0 || raw[i] > 1.0) {
      throw Error(ErrorCode::estimator_error, "estimator output value outside [0, 1] at index " + std::to_string(i));
    }
    candidates[i] = state.seen(i);
    values[i] = candidates[i] ? raw[i] : 0.0;
  }
  return GainField{ScalarField(map.geometry(), std::move(values)), std::move(candidates)};
}

std::unique_ptr<GainEstimator> make_estimator(const std::string& spec, GainMode mode, const GainOptions& options,
                                              const std::filesystem::path& exchange_dir) {
  if (spec == "exact") return std::make_unique<ExactEstimator>(mode, options);
  if (spec == "random") return std::make_unique<RandomEstimator>();
  constexpr std::string_view prefix = "external:";
  if (spec.starts_with(prefix)) {
    return std::make_unique<ExternalEstimator>(spec.substr(prefix.size()), exchange_dir);
  }
  throw Error(ErrorCode::invalid_argument, "unknown estimator '" + spec + "'");
}

void StopRule::validate() const {
  if (!std::isfinite(eps_gain) || eps_gain < 0.0) throw Error(ErrorCode::invalid_argument, "eps_gain must be >= 0");
  if (!(delta_residual >= 0.0 && delta_residual <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "delta_residual must lie in [0, 1]");
  }
  if (max_steps < 1) throw Error(ErrorCode::invalid_argument, "max_steps must be positive");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::gain_below_eps: return "gain_below_eps";
    case StopReason::residual_below_delta: return "residual_below_delta";
    case StopReason::no_shadow_boundary: return "no_shadow_boundary";
    case StopReason::max_steps: return "max_steps";
    case StopReason::no_candidate: return "no_candidate";
  }
  return "unknown";
}

std::vector<Vantage> PlanTrace::vantages() const {
  std::vector<Vantage> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.vantage);
  return out;
}

std::vector<double> PlanTrace::residuals() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.residual);
  return out;
}

Vantage select_next(const GainField& gain, const Vantage& current) {
  const auto& g = gain.values.geometry();
  if (gain.candidates.size() != g.size()) throw Error(ErrorCode::invalid_argument, "candidate mask length mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (gain.candidates[i]) best = std::max(best, gain.values[i]);
  }
  if (best == -std::numeric_limits<double>::infinity()) throw Error(ErrorCode::no_candidate, "gain field has no candidates");
  const double floor = best - 1e-12 * std::abs(best);
  std::size_t chosen = g.size();
  long long chosen_d2 = std::numeric_limits<long long>::max();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!gain.candidates[i] || gain.values[i] < floor) continue;
    const Node n = g.node(i);
    long long d2 = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      const long long d = n[a] - current.node[a];
      d2 += d * d;
    }
    if (d2 < chosen_d2) {
      chosen_d2 = d2;
      chosen = i;
    }
  }
  return Vantage{g.node(chosen)};
}

PlanTrace run_episode(const OccupancyMap& map, GainEstimator& estimator, const Vantage& x0, const StopRule& stop,
                      std::uint64_t seed, const EpisodeOptions& options) {
  stop.validate();
  const auto& g = map.geometry();
  if (!g.contains(x0.node) || !map.is_free(x0.node)) {
    throw Error(ErrorCode::invalid_vantage, "initial vantage is not in free space");
  }
  const double eps = options.eps > 0.0 ? options.eps : default_eps(g);
  Rng rng(seed);
  using Clock = std::chrono::steady_clock;

  PlanTrace trace;
  trace.geometry = g;
  std::vector<std::uint8_t> visited(g.size(), 0);

  auto t0 = Clock::now();
  auto state = observe(map, ExplorationState::empty(g), x0, eps, options.method);
  visited[g.index(x0.node)] = 1;
  auto record = [&](const Vantage& v, double raw, double normalized, Clock::time_point started) {
    StepRecord r;
    r.vantage = v;
    r.unseen = unseen_count(state.psi_cum(), map);
    r.residual = static_cast<double>(r.unseen) / static_cast<double>(map.free_count());
    r.max_gain = raw;
    r.normalized_max_gain = normalized;
    if (options.record_timing) {
      r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
    }
    trace.steps.push_back(r);
    if (options.on_step) options.on_step(state);
  };
  record(x0, 0.0, 0.0, t0);

  for (;;) {
    if (trace.steps.back().residual < stop.delta_residual) {
      trace.stop = StopReason::residual_below_delta;
      break;
    }
    if (state.boundary().max() < 1e-12) {
      trace.stop = StopReason::no_shadow_boundary;
      break;
    }
    if (static_cast<int>(trace.steps.size()) >= stop.max_steps) {
      trace.stop = StopReason::max_steps;
      break;
    }
    t0 = Clock::now();
    GainField gain;
    try {
      gain = estimator.estimate(map, state, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_candidate) throw;
      trace.stop = StopReason::no_candidate;
      break;
    }
    if (!(gain.values.geometry().shape() == g.shape()) || gain.candidates.size() != g.size()) {
      throw Error(ErrorCode::estimator_error, "estimate has the wrong shape");
    }
    // Repeat suppression: zero the gain at every previous vantage.
    std::vector<double> values(gain.values.values().begin(), gain.values.values().end());
    bool any = false;
    double raw = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (visited[i]) {
        values[i] = 0.0;
        gain.candidates[i] = 0;
      }
      if (gain.candidates[i]) {
        raw = any ? std::max(raw, values[i]) : values[i];
        any = true;
      }
    }
    if (!any) {
      trace.stop = StopReason::no_candidate;
      break;
    }
    const double normalized = estimator.normalize(raw, map, state);
    if (normalized < stop.eps_gain) {
      trace.stop = StopReason::gain_below_eps;
      trace.final_max_gain = raw;
      break;
    }
    gain.values = ScalarField(g, std::move(values));
    const Vantage next = select_next(gain, trace.steps.back().vantage);
    state = observe(map, state, next, eps, options.method);
    visited[g.index(next.node)] = 1;
    record(next, raw, normalized, t0);
  }
  return trace;
}

ScalarField frequency_map(const std::vector<PlanTrace>& traces, double sigma) {
  if (traces.empty()) throw Error(ErrorCode::invalid_argument, "frequency_map needs at least one trace");
  if (!std::isfinite(sigma) || sigma <= 0.0) throw Error(ErrorCode::invalid_argument, "sigma must be positive");
  const auto& g = traces.front().geometry;
  std::vector<double> acc(g.size(), 0.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (const auto& t : traces) {
    if (!(t.geometry == g)) throw Error(ErrorCode::invalid_argument, "traces do not share one geometry");
    for (const auto& s : t.steps) {
      const Point c = g.world(s.vantage.node);
      for (std::size_t i = 0; i < acc.size(); ++i) {
        const Point p = g.world(g.node(i));
        const double d2 = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]) + (p[2] - c[2]) * (p[2] - c[2]);
        acc[i] += std::exp(-d2 * inv);
      }
    }
  }
  return ScalarField(g, std::move(acc));
}

}  // namespace vantage
