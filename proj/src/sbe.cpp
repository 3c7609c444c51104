#include "b2e/sbe.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace b2e {

namespace {
Eigen::Vector3d obs_vector(const PendulumState& s) {
    const auto o = observe(s);
    return Eigen::Vector3d(o[0], o[1], o[2]);
}
}  // namespace

void SbeConfig::validate() const {
    if (gamma <= 0.0 || gamma >= 1.0)
        throw std::invalid_argument("sbe config: gamma must be in (0,1)");
    if (target_sync_episodes <= 0 || total_episodes <= 0 || step_cap <= 0 ||
        minibatch <= 0 || buffer_capacity == 0)
        throw std::invalid_argument("sbe config: all fields must be positive");
}

double sbe_epsilon(double progress) {
    return std::max(0.95 * std::pow(0.6, progress), 0.05);
}

double sbe_target(double h_s, double q_next_max, double gamma) {
    return (1.0 - gamma) * h_s + gamma * std::min(h_s, q_next_max);
}

std::vector<double> threshold_policy(const std::vector<double>& q_values,
                                     double eta) {
    std::vector<double> probs(q_values.size(), 0.0);
    int safe_count = 0;
    for (double q : q_values)
        if (q >= eta) ++safe_count;
    if (safe_count > 0) {
        for (std::size_t a = 0; a < q_values.size(); ++a)
            if (q_values[a] >= eta) probs[a] = 1.0 / safe_count;
    } else {
        const auto best =
            std::max_element(q_values.begin(), q_values.end()) - q_values.begin();
        probs[static_cast<std::size_t>(best)] = 1.0;
    }
    return probs;
}

std::vector<double> q_values(const Mlp& q, const PendulumState& s) {
    const Eigen::VectorXd out = q.forward_one(obs_vector(s));
    return std::vector<double>(out.data(), out.data() + out.size());
}

SbeResult train_sbe(const PendulumParams& params,
                    const std::vector<PendulumState>& rho,
                    const SbeConfig& config, std::uint64_t seed,
                    const std::string& run_dir) {
    params.validate();
    config.validate();
    if (rho.empty())
        throw std::invalid_argument("train_sbe: empty initial-state support");

    const int m = params.torque_levels;
    SbeResult result{Mlp({3, 256, 256, m}, seed), {}};
    Mlp target = result.critic;
    AdamState opt(result.critic.params().size());
    std::mt19937_64 train_rng(seed ^ 0x9e3779b97f4a7c15ull);
    ReplayBuffer buffer(config.buffer_capacity);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto flush_logs = [&]() {
        if (run_dir.empty()) return;
        std::filesystem::create_directories(run_dir);
        std::ofstream ep(run_dir + "/episodes.csv");
        write_episode_csv(result.episodes, ep);
        std::ofstream ck(run_dir + "/checkpoint.json");
        result.critic.save(ck, "sbe");
    };

    for (int episode = 0; episode < config.total_episodes; ++episode) {
        const double progress = double(episode) / config.total_episodes;
        const double eps = sbe_epsilon(progress);
        const double lr = lr_schedule(progress);

        std::seed_seq seq{seed, static_cast<std::uint64_t>(episode)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> pick(0, rho.size() - 1);
        std::uniform_int_distribution<int> random_action(0, m - 1);
        PendulumState s = rho[pick(rng)];

        EpisodeSummary summary;
        for (int k = 0; k < config.step_cap; ++k) {
            const int i = pendulum_insecurity(params, s);
            int a;
            if (unit(rng) < eps) {
                a = random_action(rng);
            } else {
                const auto q = q_values(result.critic, s);
                a = static_cast<int>(
                    std::max_element(q.begin(), q.end()) - q.begin());
            }
            const PendulumState nxt = pendulum_step(params, s, a);
            buffer.push({s, a, i, nxt});
            ++summary.length;

            if (buffer.size() >= static_cast<std::size_t>(config.minibatch)) {
                const Eigen::Index batch = config.minibatch;
                std::uniform_int_distribution<std::size_t> pick_t(
                    0, buffer.size() - 1);
                Eigen::MatrixXd X(batch, 3);
                Eigen::MatrixXd Xn(batch, 3);
                std::vector<int> actions(batch);
                std::vector<double> h_s(batch);
                std::vector<std::uint8_t> terminal(batch);
                std::vector<double> h_next(batch);
                for (Eigen::Index b = 0; b < batch; ++b) {
                    const TransitionRecord& t = buffer[pick_t(train_rng)];
                    X.row(b) = obs_vector(t.state);
                    Xn.row(b) = obs_vector(t.next);
                    actions[b] = t.action;
                    h_s[b] = signed_distance(params, t.state);
                    terminal[b] = pendulum_insecurity(params, t.next) ? 1 : 0;
                    h_next[b] = signed_distance(params, t.next);
                }
                const Eigen::MatrixXd q_next = target.forward(Xn);
                const Eigen::MatrixXd q_now = result.critic.forward(X);
                Eigen::VectorXd dlogit(batch);
                double loss = 0.0;
                for (Eigen::Index b = 0; b < batch; ++b) {
                    // Terminal transitions bootstrap with h(s') instead of
                    // the target network's maximum.
                    const double qnm =
                        terminal[b] ? h_next[b] : q_next.row(b).maxCoeff();
                    const double y = sbe_target(h_s[b], qnm, config.gamma);
                    const double err = q_now(b, actions[b]) - y;
                    loss += err * err;
                    dlogit[b] = 2.0 * err / double(batch);
                }
                if (!std::isfinite(loss))
                    throw TrainingAbort("train_sbe: non-finite loss");
                const Eigen::VectorXd grad =
                    result.critic.backward_taken_action(X, actions, dlogit);
                adam_step(opt, result.critic.params(), grad, lr);
            }

            if (i == 1) {
                summary.failed = true;
                break;
            }
            s = nxt;
        }
        if (!summary.failed && pendulum_insecurity(params, s) == 1)
            summary.failed = true;
        result.episodes.push_back(summary);

        if ((episode + 1) % config.target_sync_episodes == 0)
            target.params() = result.critic.params();
        if ((episode + 1) % 10 == 0 || episode + 1 == config.total_episodes)
            flush_logs();
    }
    return result;
}

}  // namespace b2e
