#ifndef B2E_SBE_HPP
#define B2E_SBE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "b2e/mlp.hpp"
#include "b2e/pendulum.hpp"
#include "b2e/trainer.hpp"

namespace b2e {

/// Discounted safety-critic baseline trained DDQN-style against the signed
/// distance h(s) = pi/2 - |theta|.
struct SbeConfig {
    double gamma = 0.9999;
    int target_sync_episodes = 10;  // hard target copy cadence
    int total_episodes = 500;
    int step_cap = 200;
    int minibatch = 64;
    std::size_t buffer_capacity = 50000;

    void validate() const;
};

/// Exploration schedule max{0.95 * 0.6^p, 0.05}, p = training progress.
double sbe_epsilon(double progress);

/// One-step discounted backup: (1-gamma)*h(s) + gamma*min{h(s), q_next_max}.
double sbe_target(double h_s, double q_next_max, double gamma);

/// Uniform over {a : q(s,a) >= eta}; point mass on the argmax when empty.
std::vector<double> threshold_policy(const std::vector<double>& q_values,
                                     double eta);

struct SbeResult {
    Mlp critic;        // q-network, linear output heads
    std::vector<EpisodeSummary> episodes;
};

/// Epsilon-greedy collection with minibatch regression to the frozen target
/// network (one gradient step per environment step once the buffer holds a
/// minibatch). Throws TrainingAbort on a non-finite loss.
SbeResult train_sbe(const PendulumParams& params,
                    const std::vector<PendulumState>& rho,
                    const SbeConfig& config, std::uint64_t seed,
                    const std::string& run_dir = {});

/// Raw q-values for one state.
std::vector<double> q_values(const Mlp& q, const PendulumState& s);

}  // namespace b2e

#endif
