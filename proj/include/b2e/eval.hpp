#ifndef B2E_EVAL_HPP
#define B2E_EVAL_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "b2e/mlp.hpp"
#include "b2e/oracle.hpp"
#include "b2e/pendulum.hpp"
#include "b2e/trainer.hpp"

namespace b2e {

/// A stochastic policy on the pendulum: state -> action probabilities.
using PendulumPolicy = std::function<std::vector<double>(const PendulumState&)>;

PendulumPolicy uniform_safe_pendulum_policy(const Mlp& critic);

struct EvalReport {
    double safety_rate = 0.0;
    double avg_entropy = 0.0;       // nats
    double false_safe_rate = 0.0;   // vs the grid oracle
    std::vector<int> cumulative_failures;  // per training episode
};

/// Fraction of episodes (fixed horizon) that never touch the failure set,
/// with initial states drawn from rho.
double safety_rate(const PendulumPolicy& policy, const PendulumParams& params,
                   const std::vector<PendulumState>& rho, int n_episodes,
                   int horizon, std::mt19937_64& rng);

/// Mean Shannon entropy (nats) of the policy over the cell centers of a
/// reach-avoid mask. Throws on an empty mask.
double avg_entropy(const PendulumPolicy& policy, const GridSpec& grid,
                   const SafeSetMask& reach_avoid);

/// Fraction of grid states the critic declares safe (min_a hard label 0)
/// that the oracle marks unsafe. Zero when nothing is declared safe.
double false_safe_rate(const Mlp& critic, const GridOracle& oracle);

/// Per-action raster of the critic's hard-safe predictions on the oracle grid.
SafeSetMask critic_safe_mask(const Mlp& critic, const GridSpec& grid);

std::vector<int> cumulative_failures(const std::vector<EpisodeSummary>& episodes);

/// Writes per-action raster CSV, training-curve CSV and a metrics JSON into
/// `run_dir`. The metrics JSON carries the config hash, seeds and a
/// deterministic run identifier.
void export_figures_data(const EvalReport& report, const SafeSetMask& raster,
                         const GridSpec& grid, const std::string& run_dir,
                         const std::string& config_hash,
                         const std::vector<std::uint64_t>& seeds);

/// Aggregates per-seed curves into mean and 95% confidence-interval columns
/// (mean +/- 1.96 * stderr). Curves must share a common length.
void write_curve_aggregate_csv(const std::vector<std::vector<int>>& curves,
                               std::ostream& out);

}  // namespace b2e

#endif
