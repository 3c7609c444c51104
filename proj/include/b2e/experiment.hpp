#ifndef B2E_EXPERIMENT_HPP
#define B2E_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "b2e/atlas.hpp"
#include "b2e/config.hpp"
#include "b2e/eval.hpp"
#include "b2e/oracle.hpp"
#include "b2e/sbe.hpp"
#include "b2e/trainer.hpp"

namespace b2e {

/// Everything derived from the config that training and evaluation share:
/// the grid oracle, the initial-state support and the reach-avoid mask
/// seeded from the safe axioms.
struct ExperimentContext {
    GridOracle oracle;
    std::vector<PendulumState> rho;
    SafeSetMask reach_avoid;
};

ExperimentContext build_experiment_context(const RunConfig& config);

/// Grid cells containing the prescribed safe axiom states.
std::vector<int> axiom_cells(const GridOracle& oracle,
                             const std::vector<LabeledSample>& axioms);

struct SeedRunResult {
    std::uint64_t seed = 0;
    std::string run_dir;
    bool consistent = true;       // b2e only
    EvalReport report;
    std::vector<EpisodeSummary> episodes;
};

/// Trains and evaluates one seed, writing logs, checkpoint, config copy and
/// figure data into `<out_dir>/<algo>_seed<seed>/`. Throws TrainingAbort on
/// nonconvergence.
SeedRunResult run_b2e_seed(const RunConfig& config,
                           const ExperimentContext& ctx, std::uint64_t seed);
SeedRunResult run_sbe_seed(const RunConfig& config,
                           const ExperimentContext& ctx, std::uint64_t seed);

/// Per-threshold metrics for a trained SBE critic.
struct EtaMetrics {
    double eta = 0.0;
    double safety_rate = 0.0;
    double avg_entropy = 0.0;
};
std::vector<EtaMetrics> sbe_eta_sweep(const RunConfig& config,
                                      const ExperimentContext& ctx,
                                      const Mlp& q, std::uint64_t seed);

/// Runs every configured seed plus the aggregate curve export. Returns one
/// result per seed.
std::vector<SeedRunResult> run_training_command(const RunConfig& config);

/// Oracle rasters (and the refinement-stability report when a second
/// resolution is configured). Returns the flip fraction, or -1 when no
/// refinement was requested.
double run_oracle_command(const RunConfig& config);

/// Theorem-verification harness over seeded random instances. Returns the
/// harness summary; report JSON lands in `<out_dir>/atlas_report.json`.
AtlasHarnessResult run_atlas_command(const RunConfig& config);

/// Re-evaluates a checkpoint. Throws ConfigError when the checkpoint's
/// algorithm tag does not match the config.
SeedRunResult run_eval_command(const RunConfig& config,
                               const std::string& checkpoint_path);

}  // namespace b2e

#endif
