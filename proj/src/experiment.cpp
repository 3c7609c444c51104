#include "b2e/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace b2e {

namespace {

constexpr std::uint64_t kEvalStream = 0x45564152ull;  // distinct rng stream tag

std::string seed_dir(const RunConfig& config, const std::string& algo,
                     std::uint64_t seed) {
    return config.out_dir + "/" + algo + "_seed" + std::to_string(seed);
}

void write_config_copy(const RunConfig& config, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/config.json");
    out << dump_run_config(config) << "\n";
}

std::mt19937_64 eval_rng(std::uint64_t seed) {
    std::seed_seq seq{seed, kEvalStream};
    return std::mt19937_64(seq);
}

SafeSetMask sbe_safe_mask(const Mlp& q, const GridSpec& grid, double eta) {
    const int n = grid.cells();
    const int m = q.output_dim();
    SafeSetMask mask{n, m, std::vector<std::uint8_t>(n),
                     std::vector<std::uint8_t>(n * m)};
    for (int cell = 0; cell < n; ++cell) {
        const auto qs = q_values(q, grid.center(cell));
        std::uint8_t any = 0;
        for (int a = 0; a < m; ++a) {
            const std::uint8_t safe = qs[a] >= eta ? 1 : 0;
            mask.action_safe[cell * m + a] = safe;
            any |= safe;
        }
        mask.state_safe[cell] = any;
    }
    return mask;
}

}  // namespace

ExperimentContext build_experiment_context(const RunConfig& config) {
    ExperimentContext ctx;
    ctx.oracle = grid_oracle_pendulum(config.pendulum, config.resolution);
    ctx.rho = initial_state_support(ctx.oracle, config.init_theta_box,
                                    config.init_omega_box);
    ctx.reach_avoid = reach_avoid_set(
        ctx.oracle, axiom_cells(ctx.oracle,
                                pendulum_safe_axioms(config.pendulum)));
    return ctx;
}

std::vector<int> axiom_cells(const GridOracle& oracle,
                             const std::vector<LabeledSample>& axioms) {
    std::vector<int> cells;
    for (const auto& ax : axioms) {
        const int c = oracle.grid.grid.cell_of(ax.state);
        if (cells.empty() || cells.back() != c) cells.push_back(c);
    }
    return cells;
}

SeedRunResult run_b2e_seed(const RunConfig& config,
                           const ExperimentContext& ctx, std::uint64_t seed) {
    SeedRunResult out;
    out.seed = seed;
    out.run_dir = seed_dir(config, "b2e", seed);
    write_config_copy(config, out.run_dir);

    B2eResult trained =
        train_b2e(config.pendulum, ctx.rho, config.train, seed, out.run_dir);
    out.consistent = trained.consistent;
    out.episodes = trained.episodes;
    if (!trained.consistent)
        throw TrainingAbort("b2e seed " + std::to_string(seed) +
                            ": consistency caps exceeded (see " + out.run_dir +
                            "/round_log.csv)");

    auto rng = eval_rng(seed);
    const PendulumPolicy policy = uniform_safe_pendulum_policy(trained.critic);
    out.report.safety_rate =
        safety_rate(policy, config.pendulum, ctx.rho, config.eval_episodes,
                    config.eval_horizon, rng);
    out.report.avg_entropy =
        avg_entropy(policy, ctx.oracle.grid.grid, ctx.reach_avoid);
    out.report.false_safe_rate = false_safe_rate(trained.critic, ctx.oracle);
    out.report.cumulative_failures = cumulative_failures(trained.episodes);

    export_figures_data(out.report,
                        critic_safe_mask(trained.critic, ctx.oracle.grid.grid),
                        ctx.oracle.grid.grid, out.run_dir, config_hash(config),
                        {seed});
    return out;
}

std::vector<EtaMetrics> sbe_eta_sweep(const RunConfig& config,
                                      const ExperimentContext& ctx,
                                      const Mlp& q, std::uint64_t seed) {
    std::vector<EtaMetrics> rows;
    for (double eta : config.eta_list) {
        EtaMetrics row;
        row.eta = eta;
        const PendulumPolicy policy = [&q, eta](const PendulumState& s) {
            return threshold_policy(q_values(q, s), eta);
        };
        auto rng = eval_rng(seed ^ fnv1a_hash(std::to_string(eta)));
        row.safety_rate =
            safety_rate(policy, config.pendulum, ctx.rho, config.eval_episodes,
                        config.eval_horizon, rng);
        row.avg_entropy =
            avg_entropy(policy, ctx.oracle.grid.grid, ctx.reach_avoid);
        rows.push_back(row);
    }
    return rows;
}

SeedRunResult run_sbe_seed(const RunConfig& config,
                           const ExperimentContext& ctx, std::uint64_t seed) {
    SeedRunResult out;
    out.seed = seed;
    out.run_dir = seed_dir(config, "sbe", seed);
    write_config_copy(config, out.run_dir);

    SbeResult trained =
        train_sbe(config.pendulum, ctx.rho, config.sbe, seed, out.run_dir);
    out.episodes = trained.episodes;

    // Headline metrics use the nominal threshold eta = 0.
    const PendulumPolicy policy = [&trained](const PendulumState& s) {
        return threshold_policy(q_values(trained.critic, s), 0.0);
    };
    auto rng = eval_rng(seed);
    out.report.safety_rate =
        safety_rate(policy, config.pendulum, ctx.rho, config.eval_episodes,
                    config.eval_horizon, rng);
    out.report.avg_entropy =
        avg_entropy(policy, ctx.oracle.grid.grid, ctx.reach_avoid);
    const SafeSetMask declared =
        sbe_safe_mask(trained.critic, ctx.oracle.grid.grid, 0.0);
    int declared_count = 0;
    int false_count = 0;
    for (int cell = 0; cell < declared.n; ++cell) {
        if (!declared.state_safe[cell]) continue;
        ++declared_count;
        if (!ctx.oracle.safe.state_safe[cell]) ++false_count;
    }
    out.report.false_safe_rate =
        declared_count == 0 ? 0.0 : double(false_count) / declared_count;
    out.report.cumulative_failures = cumulative_failures(trained.episodes);

    export_figures_data(out.report, declared, ctx.oracle.grid.grid, out.run_dir,
                        config_hash(config), {seed});

    const auto sweep = sbe_eta_sweep(config, ctx, trained.critic, seed);
    std::ofstream sweep_out(out.run_dir + "/eta_metrics.csv");
    sweep_out << "eta,safety_rate,avg_entropy\n";
    char buf[3][64];
    for (const auto& row : sweep) {
        std::snprintf(buf[0], sizeof(buf[0]), "%.17g", row.eta);
        std::snprintf(buf[1], sizeof(buf[1]), "%.17g", row.safety_rate);
        std::snprintf(buf[2], sizeof(buf[2]), "%.17g", row.avg_entropy);
        sweep_out << buf[0] << "," << buf[1] << "," << buf[2] << "\n";
    }
    return out;
}

std::vector<SeedRunResult> run_training_command(const RunConfig& config) {
    const ExperimentContext ctx = build_experiment_context(config);
    std::vector<SeedRunResult> results;
    for (std::uint64_t seed : config.seeds) {
        if (config.algorithm == "b2e")
            results.push_back(run_b2e_seed(config, ctx, seed));
        else if (config.algorithm == "sbe")
            results.push_back(run_sbe_seed(config, ctx, seed));
        else
            throw ConfigError("train: algorithm must be b2e or sbe");
    }
    std::vector<std::vector<int>> curves;
    for (const auto& r : results) curves.push_back(r.report.cumulative_failures);
    std::filesystem::create_directories(config.out_dir);
    std::ofstream agg(config.out_dir + "/" + config.algorithm +
                      "_aggregate_curve.csv");
    write_curve_aggregate_csv(curves, agg);
    return results;
}

double run_oracle_command(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    const GridOracle oracle =
        grid_oracle_pendulum(config.pendulum, config.resolution);
    {
        std::ofstream csv(config.out_dir + "/oracle_safe.csv");
        write_mask_csv(oracle.safe, oracle.grid.grid, csv);
        std::ofstream hdr(config.out_dir + "/oracle_safe.json");
        write_mask_header_json(oracle, hdr);
        const SafeSetMask ra = reach_avoid_set(
            oracle, axiom_cells(oracle, pendulum_safe_axioms(config.pendulum)));
        std::ofstream racsv(config.out_dir + "/reach_avoid.csv");
        write_mask_csv(ra, oracle.grid.grid, racsv);
    }
    if (config.refine_resolution == 0) return -1.0;

    const GridOracle fine =
        grid_oracle_pendulum(config.pendulum, config.refine_resolution);
    int flips = 0;
    const int n = oracle.grid.mdp.n;
    for (int cell = 0; cell < n; ++cell) {
        const PendulumState c = oracle.grid.grid.center(cell);
        const int fine_cell = fine.grid.grid.cell_of(c);
        if (oracle.safe.state_safe[cell] != fine.safe.state_safe[fine_cell])
            ++flips;
    }
    const double flip_fraction = double(flips) / double(n);
    std::ofstream report(config.out_dir + "/refinement_report.json");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", flip_fraction);
    report << "{\"coarse\":" << config.resolution
           << ",\"fine\":" << config.refine_resolution << ",\"flips\":" << flips
           << ",\"cells\":" << n << ",\"flip_fraction\":" << buf << "}\n";
    return flip_fraction;
}

AtlasHarnessResult run_atlas_command(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream json_out(config.out_dir + "/atlas_report.json");
    return run_atlas_harness(config.atlas_seed, config.atlas_instances,
                             config.atlas_max_states, config.atlas_max_actions,
                             &json_out);
}

SeedRunResult run_eval_command(const RunConfig& config,
                               const std::string& checkpoint_path) {
    std::ifstream in(checkpoint_path);
    if (!in) throw ConfigError("cannot open checkpoint: " + checkpoint_path);
    std::string algo_tag;
    Mlp net = Mlp::load(in, &algo_tag);
    if (algo_tag != config.algorithm)
        throw ConfigError("checkpoint/config mismatch on field 'algorithm': "
                          "checkpoint has '" +
                          algo_tag + "', config has '" + config.algorithm + "'");
    if (net.output_dim() != config.pendulum.torque_levels)
        throw ConfigError(
            "checkpoint/config mismatch on field 'pendulum.torque_levels'");

    const ExperimentContext ctx = build_experiment_context(config);
    SeedRunResult out;
    out.seed = net.seed();
    out.run_dir = config.out_dir + "/eval_" + config.algorithm;
    write_config_copy(config, out.run_dir);

    auto rng = eval_rng(net.seed());
    if (config.algorithm == "b2e") {
        const PendulumPolicy policy = uniform_safe_pendulum_policy(net);
        out.report.safety_rate =
            safety_rate(policy, config.pendulum, ctx.rho, config.eval_episodes,
                        config.eval_horizon, rng);
        out.report.avg_entropy =
            avg_entropy(policy, ctx.oracle.grid.grid, ctx.reach_avoid);
        out.report.false_safe_rate = false_safe_rate(net, ctx.oracle);
        export_figures_data(out.report,
                            critic_safe_mask(net, ctx.oracle.grid.grid),
                            ctx.oracle.grid.grid, out.run_dir,
                            config_hash(config), {net.seed()});
    } else if (config.algorithm == "sbe") {
        const auto sweep = sbe_eta_sweep(config, ctx, net, net.seed());
        std::ofstream sweep_out(out.run_dir + "/eta_metrics.csv");
        sweep_out << "eta,safety_rate,avg_entropy\n";
        char buf[3][64];
        for (const auto& row : sweep) {
            std::snprintf(buf[0], sizeof(buf[0]), "%.17g", row.eta);
            std::snprintf(buf[1], sizeof(buf[1]), "%.17g", row.safety_rate);
            std::snprintf(buf[2], sizeof(buf[2]), "%.17g", row.avg_entropy);
            sweep_out << buf[0] << "," << buf[1] << "," << buf[2] << "\n";
        }
        if (!sweep.empty()) {
            out.report.safety_rate = sweep.front().safety_rate;
            out.report.avg_entropy = sweep.front().avg_entropy;
        }
        export_figures_data(out.report,
                            sbe_safe_mask(net, ctx.oracle.grid.grid, 0.0),
                            ctx.oracle.grid.grid, out.run_dir,
                            config_hash(config), {net.seed()});
    } else {
        throw ConfigError("eval: algorithm must be b2e or sbe");
    }
    return out;
}

}  // namespace b2e
