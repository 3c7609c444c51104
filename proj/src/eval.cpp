#include "b2e/eval.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace b2e {

namespace {
int sample_from(const std::vector<double>& probs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    for (std::size_t a = 0; a < probs.size(); ++a) {
        acc += probs[a];
        if (u < acc) return static_cast<int>(a);
    }
    return static_cast<int>(probs.size()) - 1;
}
}  // namespace

PendulumPolicy uniform_safe_pendulum_policy(const Mlp& critic) {
    return [&critic](const PendulumState& s) {
        return uniform_safe_policy(critic_soft_values(critic, s));
    };
}

double safety_rate(const PendulumPolicy& policy, const PendulumParams& params,
                   const std::vector<PendulumState>& rho, int n_episodes,
                   int horizon, std::mt19937_64& rng) {
    if (n_episodes < 1)
        throw std::invalid_argument("safety_rate: need at least one episode");
    if (rho.empty())
        throw std::invalid_argument("safety_rate: empty initial-state support");
    std::uniform_int_distribution<std::size_t> pick(0, rho.size() - 1);
    int safe = 0;
    for (int e = 0; e < n_episodes; ++e) {
        PendulumState s = rho[pick(rng)];
        bool failed = pendulum_insecurity(params, s) == 1;
        for (int k = 0; k < horizon && !failed; ++k) {
            const int a = sample_from(policy(s), rng);
            s = pendulum_step(params, s, a);
            failed = pendulum_insecurity(params, s) == 1;
        }
        if (!failed) ++safe;
    }
    return double(safe) / double(n_episodes);
}

double avg_entropy(const PendulumPolicy& policy, const GridSpec& grid,
                   const SafeSetMask& reach_avoid) {
    double total = 0.0;
    int count = 0;
    for (int cell = 0; cell < reach_avoid.n; ++cell) {
        if (!reach_avoid.state_safe[cell]) continue;
        const auto probs = policy(grid.center(cell));
        double h = 0.0;
        for (double p : probs)
            if (p > 0.0) h -= p * std::log(p);
        total += h;
        ++count;
    }
    if (count == 0) throw std::invalid_argument("avg_entropy: empty mask");
    return total / count;
}

SafeSetMask critic_safe_mask(const Mlp& critic, const GridSpec& grid) {
    const int n = grid.cells();
    Eigen::MatrixXd X(n, 3);
    for (int cell = 0; cell < n; ++cell) {
        const auto o = observe(grid.center(cell));
        X.row(cell) = Eigen::Vector3d(o[0], o[1], o[2]);
    }
    const Eigen::MatrixXd p = sigmoid(critic.forward(X));
    const int m = static_cast<int>(p.cols());
    SafeSetMask mask{n, m, std::vector<std::uint8_t>(n),
                     std::vector<std::uint8_t>(n * m)};
    for (int cell = 0; cell < n; ++cell) {
        std::uint8_t any = 0;
        for (int a = 0; a < m; ++a) {
            const std::uint8_t safe = hard_label(p(cell, a)) == 0 ? 1 : 0;
            mask.action_safe[cell * m + a] = safe;
            any |= safe;
        }
        mask.state_safe[cell] = any;
    }
    return mask;
}

double false_safe_rate(const Mlp& critic, const GridOracle& oracle) {
    const SafeSetMask declared = critic_safe_mask(critic, oracle.grid.grid);
    int declared_safe = 0;
    int false_safe = 0;
    for (int cell = 0; cell < declared.n; ++cell) {
        if (!declared.state_safe[cell]) continue;
        ++declared_safe;
        if (!oracle.safe.state_safe[cell]) ++false_safe;
    }
    if (declared_safe == 0) return 0.0;
    return double(false_safe) / double(declared_safe);
}

std::vector<int> cumulative_failures(
    const std::vector<EpisodeSummary>& episodes) {
    std::vector<int> curve;
    curve.reserve(episodes.size());
    int total = 0;
    for (const auto& e : episodes) {
        total += e.failed ? 1 : 0;
        curve.push_back(total);
    }
    return curve;
}

void export_figures_data(const EvalReport& report, const SafeSetMask& raster,
                         const GridSpec& grid, const std::string& run_dir,
                         const std::string& config_hash,
                         const std::vector<std::uint64_t>& seeds) {
    std::filesystem::create_directories(run_dir);
    {
        std::ofstream out(run_dir + "/safe_raster.csv");
        if (!out)
            throw std::runtime_error("cannot write " + run_dir + "/safe_raster.csv");
        write_mask_csv(raster, grid, out);
    }
    {
        std::ofstream out(run_dir + "/training_curve.csv");
        if (!out)
            throw std::runtime_error("cannot write " + run_dir +
                                     "/training_curve.csv");
        out << "episode,cumulative_failures\n";
        for (std::size_t e = 0; e < report.cumulative_failures.size(); ++e)
            out << e << "," << report.cumulative_failures[e] << "\n";
    }
    {
        nlohmann::json j;
        j["schema_version"] = 1;
        j["entropy_unit"] = "nats";
        j["safety_rate"] = report.safety_rate;
        j["avg_entropy"] = report.avg_entropy;
        j["false_safe_rate"] = report.false_safe_rate;
        j["config_hash"] = config_hash;
        j["seeds"] = seeds;
        std::string seed_text = config_hash;
        for (auto s : seeds) seed_text += ":" + std::to_string(s);
        char run_id[32];
        std::snprintf(run_id, sizeof(run_id), "%016llx",
                      static_cast<unsigned long long>(fnv1a_hash(seed_text)));
        j["run_id"] = run_id;
        std::ofstream out(run_dir + "/metrics.json");
        if (!out)
            throw std::runtime_error("cannot write " + run_dir + "/metrics.json");
        out << j.dump(2) << "\n";
    }
}

void write_curve_aggregate_csv(const std::vector<std::vector<int>>& curves,
                               std::ostream& out) {
    out << "episode,mean,ci_lo,ci_hi\n";
    if (curves.empty()) return;
    const std::size_t len = curves.front().size();
    for (const auto& c : curves)
        if (c.size() != len)
            throw std::invalid_argument("curve aggregate: length mismatch");
    char buf[3][64];
    for (std::size_t e = 0; e < len; ++e) {
        double mean = 0.0;
        for (const auto& c : curves) mean += c[e];
        mean /= double(curves.size());
        double var = 0.0;
        for (const auto& c : curves) var += (c[e] - mean) * (c[e] - mean);
        const double stderr_ =
            curves.size() > 1
                ? std::sqrt(var / double(curves.size() - 1)) /
                      std::sqrt(double(curves.size()))
                : 0.0;
        std::snprintf(buf[0], sizeof(buf[0]), "%.17g", mean);
        std::snprintf(buf[1], sizeof(buf[1]), "%.17g", mean - 1.96 * stderr_);
        std::snprintf(buf[2], sizeof(buf[2]), "%.17g", mean + 1.96 * stderr_);
        out << e << "," << buf[0] << "," << buf[1] << "," << buf[2] << "\n";
    }
}

}  // namespace b2e
