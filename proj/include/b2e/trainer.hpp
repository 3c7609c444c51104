#ifndef B2E_TRAINER_HPP
#define B2E_TRAINER_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "b2e/mlp.hpp"
#include "b2e/oracle.hpp"
#include "b2e/pendulum.hpp"

namespace b2e {

/// One (s, a, i(s), s') sample from environment interaction.
struct TransitionRecord {
    PendulumState state;
    int action = 0;
    int insecurity = 0;
    PendulumState next;
};

/// FIFO transition buffer with bounded capacity.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 50000) : capacity_(capacity) {}

    void push(const TransitionRecord& t) {
        if (data_.size() == capacity_) data_.pop_front();
        data_.push_back(t);
    }
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return data_.empty(); }
    const TransitionRecord& operator[](std::size_t k) const { return data_[k]; }

private:
    std::size_t capacity_;
    std::deque<TransitionRecord> data_;
};

struct LabeledSample {
    PendulumState state;
    int action = 0;
    int label = 0;  // y in {0,1}
};

struct TrainConfig {
    int total_episodes = 500;
    int episodes_per_round = 10;
    int step_cap = 200;
    int minibatch = 64;
    int max_epochs = 2000;       // inner-loop cap per training pass
    int max_passes = 50;         // consistency-pass cap
    std::size_t buffer_capacity = 50000;

    void validate() const;  // throws std::invalid_argument
};

/// Prescribed safe axioms: a 5x5 grid of (theta, omega) near the upright
/// equilibrium, every action, all labeled safe.
std::vector<LabeledSample> pendulum_safe_axioms(const PendulumParams& params,
                                                double half_width = 0.15,
                                                int points_per_axis = 5);

/// Initial-state support: oracle-safe cell centers within the given box.
std::vector<PendulumState> initial_state_support(const GridOracle& oracle,
                                                 double theta_box = 1.0,
                                                 double omega_box = 1.0);

/// Hard label at the fixed 1/2 threshold, rounding half up (ties unsafe).
inline int hard_label(double soft) { return soft >= 0.5 ? 1 : 0; }

/// Soft critic values b(s, .) for one state.
std::vector<double> critic_soft_values(const Mlp& critic, const PendulumState& s);

/// Uniform distribution over actions with hard label 0; if none, uniform over
/// the argmin of the soft values.
std::vector<double> uniform_safe_policy(const std::vector<double>& soft_values);

struct EpisodeSummary {
    int length = 0;
    bool failed = false;
};

/// Runs `episodes` episodes with the uniform-safe policy of `critic`,
/// appending transitions to the buffer. Per-episode RNG streams are derived
/// from (master_seed, episode index), so results are independent of
/// collection interleaving.
std::vector<EpisodeSummary> run_episodes(
    const PendulumParams& params, const std::vector<PendulumState>& rho,
    const Mlp& critic, const TrainConfig& config, int episodes,
    std::uint64_t master_seed, int first_episode_index, ReplayBuffer& buffer);

/// Soft bootstrap label y = i(s) + (1-i(s)) * min_a' b(s', a') for every
/// buffered transition (targets are detached; no gradient flows through them).
std::vector<double> soft_labels(const Mlp& critic, const ReplayBuffer& buffer);

/// The unsafe dataset of Algorithm 1: transitions whose soft label rounds to
/// 1, excluding (s, a) pairs that fall within the axiom guard radius of a
/// safe axiom with the same action (axioms win; such collisions are counted
/// in `conflicts_out`). Soft labels inside the dead zone around 1/2 carry no
/// usable signal and defer to the critic's current hard prediction at (s, a).
std::vector<LabeledSample> build_unsafe_dataset(
    const Mlp& critic, const ReplayBuffer& buffer,
    const std::vector<LabeledSample>& safe_axioms, int* conflicts_out = nullptr);

/// Fraction of samples whose hard prediction matches the label.
double accuracy(const Mlp& critic, const std::vector<LabeledSample>& dataset);

/// Number of buffered transitions whose rebuilt hard label is unsafe while
/// the critic's own hard prediction at (s, a) is safe, plus axioms predicted
/// unsafe. Transitions inside the axiom guard are excluded (axioms override
/// the bootstrap there), and dead-zone soft labels defer to the critic's own
/// prediction, matching the training rebuild. Zero means the critic never
/// contradicts its own
/// bootstrap in the unsafe (fail-dangerous) direction at the 1/2 threshold.
int self_consistency_mismatches(const Mlp& critic, const ReplayBuffer& buffer,
                                const std::vector<LabeledSample>& safe_axioms);

struct ConsistencyResult {
    bool consistent = false;
    int passes_used = 0;
    int epochs_used = 0;      // total inner epochs across passes
    double last_accuracy = 0.0;
    int conflict_count = 0;   // unsafe labels dropped for colliding with axioms
    int unsafe_count = 0;     // size of the final unsafe dataset
};

/// Trains on the safe axioms alone until accuracy 1. Throws TrainingAbort if
/// the epoch cap is exceeded.
void initialize_from_safe(Mlp& critic, AdamState& opt,
                          const std::vector<LabeledSample>& safe_axioms,
                          const TrainConfig& config, double lr,
                          std::mt19937_64& rng);

/// Alternates minibatch BCE training to accuracy 1 with label rebuilds until
/// a rebuild leaves every label correctly predicted. The dataset is the safe
/// axioms plus every buffered transition with its rebuilt bootstrap label
/// (explicit negatives included); axiom-guard collisions are dropped (and
/// reported) rather than trained on, and dead-zone soft labels defer to the
/// critic's current prediction.
ConsistencyResult train_until_consistent(
    Mlp& critic, AdamState& opt, const ReplayBuffer& buffer,
    const std::vector<LabeledSample>& safe_axioms, const TrainConfig& config,
    double lr, std::mt19937_64& rng);

struct TrainingAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RoundLog {
    int round = 0;
    std::size_t buffer_size = 0;
    int unsafe_size = 0;
    int inner_epochs = 0;
    int passes = 0;
    double accuracy = 0.0;
    bool consistent = false;
};

struct B2eResult {
    Mlp critic;
    std::vector<EpisodeSummary> episodes;
    std::vector<RoundLog> rounds;
    bool consistent = false;
};

/// End-to-end training for one seed. If `run_dir` is nonempty, writes
/// round_log.csv, episodes.csv, and a checkpoint after every round.
B2eResult train_b2e(const PendulumParams& params,
                    const std::vector<PendulumState>& rho,
                    const TrainConfig& config, std::uint64_t seed,
                    const std::string& run_dir = {});

/// Writes episode summaries as "episode,failed,cumulative_failures" CSV.
void write_episode_csv(const std::vector<EpisodeSummary>& episodes,
                       std::ostream& out);
void write_round_log_csv(const std::vector<RoundLog>& rounds, std::ostream& out);

}  // namespace b2e

#endif
