#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vantage/gain.hpp"
#include "vantage/grid.hpp"
#include "vantage/random.hpp"
#include "vantage/visibility.hpp"

namespace vantage {

/// Produces the gain field the greedy loop maximises at each step.
class GainEstimator {
 public:
  virtual ~GainEstimator() = default;
  virtual std::string name() const = 0;
  /// Field on the map's geometry, >= 0 and zero outside its candidate mask.
  virtual GainField estimate(const OccupancyMap& map, const ExplorationState& state, Rng& rng) = 0;
  /// Dimensionless version of a raw maximum, compared against the eps_gain stop.
  virtual double normalize(double raw_max, const OccupancyMap& map, const ExplorationState& state) const = 0;
};

/// Exact information gain. Builds a VisibilityCache for the map on first use
/// when it fits in `cache_limit_bytes`, otherwise evaluates visibility per
/// candidate. Normalised gain is raw / |Omega_k|.
class ExactEstimator final : public GainEstimator {
 public:
  explicit ExactEstimator(GainMode mode, GainOptions options = {}, std::size_t cache_limit_bytes = std::size_t{1} << 30)
      : mode_(mode), options_(options), cache_limit_(cache_limit_bytes) {}

  std::string name() const override { return "exact"; }
  GainField estimate(const OccupancyMap& map, const ExplorationState& state, Rng& rng) override;
  double normalize(double raw_max, const OccupancyMap& map, const ExplorationState& state) const override;
  GainMode mode() const noexcept { return mode_; }
  /// The field estimate() returns; reuses the same cache.
  GainField field(const OccupancyMap& map, const ExplorationState& state);

 private:
  GainMode mode_;
  GainOptions options_;
  std::size_t cache_limit_;
  std::optional<VisibilityCache> cache_;
};

/// Random walker baseline: gain 1 at one node drawn uniformly from the
/// visible region (nodes already used as vantages are redrawn), 0 elsewhere.
class RandomEstimator final : public GainEstimator {
 public:
  std::string name() const override { return "random"; }
  GainField estimate(const OccupancyMap& map, const ExplorationState& state, Rng& rng) override;
  double normalize(double raw_max, const OccupancyMap&, const ExplorationState&) const override { return raw_max; }
};

/// Delegates to an external program through RFA files:
///   <command> --psi <dir>/psi.rfa --boundary <dir>/boundary.rfa --out <dir>/gain.rfa
/// The program must exit 0 and write a same-shape field with values in [0, 1].
/// The exploration candidate mask is applied to its output.
class ExternalEstimator final : public GainEstimator {
 public:
  ExternalEstimator(std::string command, std::filesystem::path exchange_dir);

  std::string name() const override { return "external:" + command_; }
  GainField estimate(const OccupancyMap& map, const ExplorationState& state, Rng& rng) override;
  double normalize(double raw_max, const OccupancyMap&, const ExplorationState&) const override { return raw_max; }

 private:
  std::string command_;
  std::filesystem::path dir_;
};

/// Builds an estimator from "exact", "random" or "external:<command>".
std::unique_ptr<GainEstimator> make_estimator(const std::string& spec, GainMode mode, const GainOptions& options,
                                              const std::filesystem::path& exchange_dir);

/// The random baseline as a pure function of (state, seed).
/// Throws no_candidate when nothing is visible.
GainField random_estimator(const ExplorationState& state, const OccupancyMap& map, std::uint64_t seed);

struct StopRule {
  /// Stop when the normalised maximum gain falls below this value.
  double eps_gain = 1e-3;
  /// Stop when the residual falls below this value.
  double delta_residual = 1e-3;
  /// Upper bound on the number of vantage points, x0 included.
  int max_steps = 100;

  void validate() const;
};

enum class StopReason { gain_below_eps, residual_below_delta, no_shadow_boundary, max_steps, no_candidate };

std::string to_string(StopReason reason);

struct StepRecord {
  Vantage vantage;
  double residual = 1.0;
  /// |Omega \ Omega_k| in nodes after this step.
  std::size_t unseen = 0;
  /// Raw and normalised maximum of the estimate that selected this vantage;
  /// zero for x0.
  double max_gain = 0.0;
  double normalized_max_gain = 0.0;
  double wall_ms = 0.0;
};

struct PlanTrace {
  GridGeometry geometry;
  std::vector<StepRecord> steps;
  StopReason stop = StopReason::max_steps;
  /// Maximum of the estimate computed in the round that stopped the loop,
  /// when the loop stopped after estimating.
  std::optional<double> final_max_gain;

  std::vector<Vantage> vantages() const;
  std::vector<double> residuals() const;
};

/// Argmax of the candidate gains. Values within relative 1e-12 of the maximum
/// tie; ties go to the node closest to `current`, then the lowest row-major
/// index. Throws no_candidate for an empty candidate mask.
Vantage select_next(const GainField& gain, const Vantage& current);

struct EpisodeOptions {
  /// Smearing width for b_k; <= 0 selects 3 dx.
  double eps = 0.0;
  VisibilityMethod method = VisibilityMethod::sweep;
  /// Fill StepRecord::wall_ms. Off by default so traces are reproducible.
  bool record_timing = false;
  /// Called after every observation with the new state.
  std::function<void(const ExplorationState&)> on_step;
};

/// Greedy loop: estimate, suppress visited nodes, select, observe, until a
/// stop rule fires. Deterministic for fixed inputs and seed.
PlanTrace run_episode(const OccupancyMap& map, GainEstimator& estimator, const Vantage& x0, const StopRule& stop,
                      std::uint64_t seed, const EpisodeOptions& options = {});

/// Sum over all vantages of exp(-|x - x_i|^2 / (2 sigma^2)), sigma in world units.
ScalarField frequency_map(const std::vector<PlanTrace>& traces, double sigma);

}  // namespace vantage
