#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>

#include "b2e/trainer.hpp"

using namespace b2e;

namespace {

/// Single linear layer with constant bias: every soft value is sigmoid(bias).
Mlp constant_critic(int actions, double bias) {
    Mlp net({3, actions}, 0);
    net.params().setZero();
    net.params().tail(actions).setConstant(bias);
    return net;
}

TrainConfig smoke_config() {
    TrainConfig c;
    c.total_episodes = 6;
    c.episodes_per_round = 3;
    c.step_cap = 25;
    return c;
}

std::vector<PendulumState> tiny_rho() {
    return {{0.0, 0.0}, {0.1, -0.1}, {-0.05, 0.2}};
}

}  // namespace

TEST_CASE("replay buffer evicts oldest at capacity") {
    ReplayBuffer buf(3);
    for (int k = 0; k < 5; ++k)
        buf.push({{double(k), 0.0}, 0, 0, {0.0, 0.0}});
    CHECK(buf.size() == 3);
    CHECK(buf[0].state.theta == 2.0);
    CHECK(buf[2].state.theta == 4.0);
}

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.minibatch = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("safe axioms form the prescribed 5x5 grid over all actions") {
    const auto axioms = pendulum_safe_axioms(PendulumParams{});
    CHECK(axioms.size() == 125);
    double max_theta = 0.0, min_theta = 0.0;
    for (const auto& ax : axioms) {
        CHECK(ax.label == 0);
        CHECK(std::abs(ax.state.theta) <= 0.15 + 1e-12);
        CHECK(std::abs(ax.state.omega) <= 0.15 + 1e-12);
        max_theta = std::max(max_theta, ax.state.theta);
        min_theta = std::min(min_theta, ax.state.theta);
    }
    CHECK(max_theta == doctest::Approx(0.15));
    CHECK(min_theta == doctest::Approx(-0.15));
}

TEST_CASE("every safe axiom is oracle-safe") {
    const GridOracle oracle = grid_oracle_pendulum(PendulumParams{}, 101);
    for (const auto& ax : pendulum_safe_axioms(PendulumParams{})) {
        const int cell = oracle.grid.grid.cell_of(ax.state);
        CHECK(oracle.safe.state_safe[cell] == 1);
    }
}

TEST_CASE("initial-state support is the oracle-safe region inside the box") {
    const GridOracle oracle = grid_oracle_pendulum(PendulumParams{}, 61);
    const auto rho = initial_state_support(oracle, 1.0, 1.0);
    CHECK(!rho.empty());
    for (const auto& s : rho) {
        CHECK(std::abs(s.theta) <= 1.0);
        CHECK(std::abs(s.omega) <= 1.0);
        CHECK(oracle.safe.state_safe[oracle.grid.grid.cell_of(s)] == 1);
    }
}

TEST_CASE("hard label rounds half up") {
    CHECK(hard_label(0.4999999) == 0);
    CHECK(hard_label(0.5) == 1);
    CHECK(hard_label(0.9) == 1);
    CHECK(hard_label(0.0) == 0);
}

TEST_CASE("uniform-safe policy spreads over the hard-safe actions") {
    const std::vector<double> probs =
        uniform_safe_policy({0.1, 0.9, 0.2, 0.8, 0.7});
    CHECK(probs == std::vector<double>({0.5, 0.0, 0.5, 0.0, 0.0}));
}

TEST_CASE("uniform-safe policy is uniform when everything is safe") {
    const std::vector<double> probs =
        uniform_safe_policy({0.1, 0.2, 0.3, 0.4, 0.45});
    for (double p : probs) CHECK(p == doctest::Approx(0.2));
}

TEST_CASE("uniform-safe policy falls back to the soft argmin set") {
    const std::vector<double> probs =
        uniform_safe_policy({0.9, 0.7, 0.99, 0.7, 0.8});
    CHECK(probs == std::vector<double>({0.0, 0.5, 0.0, 0.5, 0.0}));
}

TEST_CASE("episode starting inside the failure set ends immediately") {
    const Mlp critic = constant_critic(5, -1.0);
    ReplayBuffer buf;
    const auto summaries =
        run_episodes(PendulumParams{}, {{1.6, 0.0}}, critic, smoke_config(), 3,
                     7, 0, buf);
    std::size_t total = 0;
    for (const auto& s : summaries) {
        CHECK(s.length == 1);
        CHECK(s.failed);
        total += s.length;
    }
    CHECK(buf.size() == total);
    CHECK(buf[0].insecurity == 1);
}

TEST_CASE("transition count equals the sum of episode lengths") {
    const Mlp critic = constant_critic(5, -1.0);
    ReplayBuffer buf;
    const auto summaries = run_episodes(PendulumParams{}, tiny_rho(), critic,
                                        smoke_config(), 4, 11, 0, buf);
    std::size_t total = 0;
    for (const auto& s : summaries) total += s.length;
    CHECK(buf.size() == total);
}

TEST_CASE("episode collection is independent of interleaving") {
    const Mlp critic = constant_critic(5, -1.0);
    ReplayBuffer whole, split;
    run_episodes(PendulumParams{}, tiny_rho(), critic, smoke_config(), 4, 13, 0,
                 whole);
    run_episodes(PendulumParams{}, tiny_rho(), critic, smoke_config(), 2, 13, 0,
                 split);
    run_episodes(PendulumParams{}, tiny_rho(), critic, smoke_config(), 2, 13, 2,
                 split);
    REQUIRE(whole.size() == split.size());
    for (std::size_t k = 0; k < whole.size(); ++k) {
        CHECK(whole[k].state.theta == split[k].state.theta);
        CHECK(whole[k].state.omega == split[k].state.omega);
        CHECK(whole[k].action == split[k].action);
        CHECK(whole[k].insecurity == split[k].insecurity);
        CHECK(whole[k].next.theta == split[k].next.theta);
    }
}

TEST_CASE("soft labels follow the bootstrap formula") {
    Mlp critic({3, 8, 5}, 3);
    ReplayBuffer buf;
    buf.push({{0.2, 0.1}, 1, 0, {0.3, -0.5}});
    buf.push({{1.6, 0.0}, 0, 1, {1.7, 0.1}});
    const auto labels = soft_labels(critic, buf);
    const auto soft = critic_soft_values(critic, {0.3, -0.5});
    const double expected =
        *std::min_element(soft.begin(), soft.end());
    CHECK(labels[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(labels[1] == 1.0);
}

TEST_CASE("unsafe dataset keeps y >= 1/2 and drops axiom collisions") {
    const auto axioms = pendulum_safe_axioms(PendulumParams{});
    ReplayBuffer buf;
    buf.push({{0.4, 0.4}, 2, 0, {0.5, 0.5}});      // y = 0.5 -> included
    buf.push({{1.6, 0.0}, 0, 1, {1.7, 0.0}});      // i=1 -> included
    buf.push({axioms[0].state, axioms[0].action, 0, {0.0, 0.0}});  // collision
    // Inside the guard radius of an axiom (same action): also a collision.
    buf.push({{axioms[0].state.theta + 0.05, axioms[0].state.omega + 0.05},
              axioms[0].action, 0, {0.0, 0.0}});

    const Mlp half = constant_critic(5, 0.0);  // every soft value is 1/2
    int conflicts = 0;
    const auto unsafe = build_unsafe_dataset(half, buf, axioms, &conflicts);
    CHECK(unsafe.size() == 2);
    CHECK(conflicts == 2);
    for (const auto& s : unsafe) CHECK(s.label == 1);

    const Mlp low = constant_critic(5, -2.0);  // soft values about 0.12
    conflicts = 0;
    const auto only_terminal = build_unsafe_dataset(low, buf, axioms, &conflicts);
    CHECK(only_terminal.size() == 1);  // the i=1 transition stays
    CHECK(conflicts == 0);
}

TEST_CASE("accuracy counts hard-label agreement") {
    const Mlp half = constant_critic(5, 0.0);  // predicts 1 everywhere
    std::vector<LabeledSample> data{{{0.0, 0.0}, 0, 1},
                                    {{0.1, 0.0}, 1, 1},
                                    {{0.2, 0.0}, 2, 1},
                                    {{0.3, 0.0}, 3, 0}};
    CHECK(accuracy(half, data) == doctest::Approx(0.75));

    const Mlp just_below = constant_critic(5, -0.01);  // predicts 0 everywhere
    std::vector<LabeledSample> safe_only{{{0.0, 0.0}, 0, 0},
                                         {{0.1, 0.1}, 4, 0}};
    CHECK(accuracy(just_below, safe_only) == 1.0);
    CHECK(accuracy(half, safe_only) == 0.0);  // exactly 1/2 rounds unsafe
}

TEST_CASE("accuracy rejects an empty dataset") {
    const Mlp net = constant_critic(5, 0.0);
    CHECK_THROWS_AS(accuracy(net, {}), std::invalid_argument);
}

TEST_CASE("initialize_from_safe fits the axioms and is seed-deterministic") {
    const auto axioms = pendulum_safe_axioms(PendulumParams{});
    TrainConfig config;
    Mlp a({3, 32, 5}, 17);
    AdamState opt_a(a.params().size());
    std::mt19937_64 rng_a(5);
    initialize_from_safe(a, opt_a, axioms, config, 1e-4, rng_a);
    CHECK(accuracy(a, axioms) == 1.0);
    for (const auto& ax : axioms)
        CHECK(critic_soft_values(a, ax.state)[ax.action] < 0.5);

    Mlp b({3, 32, 5}, 17);
    AdamState opt_b(b.params().size());
    std::mt19937_64 rng_b(5);
    initialize_from_safe(b, opt_b, axioms, config, 1e-4, rng_b);
    CHECK(a.params() == b.params());
}

TEST_CASE("train_until_consistent reaches literal self-consistency") {
    const auto axioms = pendulum_safe_axioms(PendulumParams{});
    TrainConfig config = smoke_config();
    Mlp critic({3, 64, 5}, 23);
    AdamState opt(critic.params().size());
    std::mt19937_64 rng(23);
    initialize_from_safe(critic, opt, axioms, config, 1e-4, rng);

    ReplayBuffer buf;
    run_episodes(PendulumParams{}, tiny_rho(), critic, config, 6, 23, 0, buf);
    const ConsistencyResult res =
        train_until_consistent(critic, opt, buf, axioms, config, 1e-4, rng);
    REQUIRE(res.consistent);
    CHECK(res.last_accuracy == 1.0);
    CHECK(res.conflict_count == 0);
    CHECK(self_consistency_mismatches(critic, buf, axioms) == 0);
}

TEST_CASE("synthetic axiom conflict is dropped, reported, and axioms win") {
    // A transition sitting exactly on an axiom but terminating in the failure
    // set contradicts the axiom forever. It is excluded from training as a
    // conflict (the axiom wins), reported in the result, and does not block
    // consistency on the rest of the dataset.
    const auto axioms = pendulum_safe_axioms(PendulumParams{});
    TrainConfig config = smoke_config();
    Mlp critic({3, 16, 5}, 29);
    AdamState opt(critic.params().size());
    std::mt19937_64 rng(29);
    initialize_from_safe(critic, opt, axioms, config, 1e-4, rng);
    config.max_passes = 3;

    ReplayBuffer buf;
    buf.push({axioms[0].state, axioms[0].action, 1, {1.6, 0.0}});
    const ConsistencyResult res =
        train_until_consistent(critic, opt, buf, axioms, config, 1e-4, rng);
    CHECK(res.consistent);
    CHECK(res.conflict_count == 1);
    // The contested (s, a) keeps the axiom's safe prediction.
    CHECK(critic_soft_values(critic, axioms[0].state)[axioms[0].action] < 0.5);
    // Overridden bootstrap labels are not counted as self-inconsistencies.
    CHECK(self_consistency_mismatches(critic, buf, axioms) == 0);
}

TEST_CASE("train_b2e smoke run writes logs and a checkpoint") {
    const std::string dir = "test_runs/b2e_smoke";
    std::filesystem::remove_all(dir);
    const B2eResult result = train_b2e(PendulumParams{}, tiny_rho(),
                                       smoke_config(), 31, dir);
    CHECK(result.consistent);
    CHECK(result.episodes.size() == 6);
    CHECK(result.rounds.size() == 2);
    CHECK(std::filesystem::exists(dir + "/round_log.csv"));
    CHECK(std::filesystem::exists(dir + "/episodes.csv"));
    CHECK(std::filesystem::exists(dir + "/checkpoint.json"));
}

TEST_CASE("episode CSV carries the cumulative failure column") {
    std::vector<EpisodeSummary> eps{{200, false}, {31, true}, {200, false},
                                    {12, true}};
    std::stringstream out;
    write_episode_csv(eps, out);
    std::string line;
    std::getline(out, line);
    CHECK(line == "episode,length,failed,cumulative_failures");
    std::getline(out, line);
    CHECK(line == "0,200,0,0");
    std::getline(out, line);
    CHECK(line == "1,31,1,1");
    std::getline(out, line);
    std::getline(out, line);
    CHECK(line == "3,12,1,2");
}
