#ifndef B2E_CONFIG_HPP
#define B2E_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "b2e/pendulum.hpp"
#include "b2e/sbe.hpp"
#include "b2e/trainer.hpp"

namespace b2e {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Process exit codes shared by the CLI subcommands.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 2,
    kExitTrainingAbort = 3,
    kExitTheoremViolation = 4,
};

/// One experiment configuration. All defaults embedded; serialized copy is
/// written into every run directory.
struct RunConfig {
    std::string algorithm = "b2e";  // b2e | sbe | oracle | atlas | eval
    PendulumParams pendulum;
    TrainConfig train;
    SbeConfig sbe;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string out_dir = "runs";
    int resolution = 201;
    int refine_resolution = 0;  // optional second grid for stability reports
    std::vector<double> eta_list = {-0.1, 0.0, 0.05, 0.1, 0.2};
    int eval_episodes = 100;
    int eval_horizon = 200;
    double init_theta_box = 1.0;
    double init_omega_box = 1.0;
    int atlas_instances = 100;
    int atlas_max_states = 6;
    int atlas_max_actions = 3;
    std::uint64_t atlas_seed = 20240601;

    void validate() const;  // throws ConfigError naming the offending key
};

/// Strict JSON parsing: unknown keys are rejected with the key name.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config_file(const std::string& path);

/// `key=value` override with dotted paths, e.g. "train.total_episodes=20".
void apply_override(RunConfig& config, const std::string& assignment);

std::string dump_run_config(const RunConfig& config);

/// FNV-1a hash of the canonical serialized config, as fixed-width hex.
std::string config_hash(const RunConfig& config);

}  // namespace b2e

#endif
