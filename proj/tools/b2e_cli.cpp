// Command-line front end: train / oracle / atlas / eval / print-config.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "b2e/config.hpp"
#include "b2e/experiment.hpp"

namespace {

b2e::RunConfig make_config(const std::string& config_path,
                           const std::vector<std::string>& overrides,
                           const std::string& algo_override) {
    b2e::RunConfig config;
    if (!config_path.empty()) config = b2e::load_run_config_file(config_path);
    if (const char* root = std::getenv("B2E_OUTPUT_ROOT"); root && *root)
        config.out_dir = std::string(root) + "/" + config.out_dir;
    if (!algo_override.empty()) config.algorithm = algo_override;
    for (const auto& o : overrides) b2e::apply_override(config, o);
    config.validate();
    return config;
}

void write_diagnostics(const b2e::RunConfig& config, const std::string& what) {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream out(config.out_dir + "/abort_diagnostics.txt");
    out << what << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary safety-critic experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string algo;
    std::string checkpoint_path;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", overrides,
                   "config override key=value (dotted paths)");

    auto* train = app.add_subcommand("train", "run b2e or sbe training");
    train->add_option("--algo", algo, "b2e or sbe");
    auto* oracle = app.add_subcommand("oracle", "compute safe-region rasters");
    auto* atlas = app.add_subcommand("atlas", "verify fixed-point structure");
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")
        ->required();
    auto* print_config =
        app.add_subcommand("print-config", "dump the effective config");

    CLI11_PARSE(app, argc, argv);

    b2e::RunConfig config;
    try {
        config = make_config(config_path, overrides, algo);
    } catch (const b2e::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return b2e::kExitConfigError;
    }

    try {
        if (print_config->parsed()) {
            std::cout << b2e::dump_run_config(config) << "\n";
            return b2e::kExitOk;
        }
        if (train->parsed()) {
            if (config.algorithm != "b2e" && config.algorithm != "sbe") {
                std::cerr << "config error: train needs algorithm b2e or sbe\n";
                return b2e::kExitConfigError;
            }
            const auto results = b2e::run_training_command(config);
            for (const auto& r : results) {
                std::printf("seed %llu: safety_rate=%.4f entropy=%.4f "
                            "false_safe_rate=%.4f dir=%s\n",
                            static_cast<unsigned long long>(r.seed),
                            r.report.safety_rate, r.report.avg_entropy,
                            r.report.false_safe_rate, r.run_dir.c_str());
            }
            return b2e::kExitOk;
        }
        if (oracle->parsed()) {
            const double flip = b2e::run_oracle_command(config);
            if (flip >= 0.0)
                std::printf("refinement flip fraction: %.6f\n", flip);
            std::printf("oracle rasters written to %s\n",
                        config.out_dir.c_str());
            return b2e::kExitOk;
        }
        if (atlas->parsed()) {
            const auto result = b2e::run_atlas_command(config);
            std::printf("atlas: %d instances, %d fixed points, %d skipped, "
                        "%d violations\n",
                        result.instances, result.fixed_points_total,
                        result.skipped_budget, result.violations);
            return result.violations == 0 ? b2e::kExitOk
                                          : b2e::kExitTheoremViolation;
        }
        if (eval->parsed()) {
            const auto r = b2e::run_eval_command(config, checkpoint_path);
            std::printf("safety_rate=%.4f entropy=%.4f false_safe_rate=%.4f "
                        "dir=%s\n",
                        r.report.safety_rate, r.report.avg_entropy,
                        r.report.false_safe_rate, r.run_dir.c_str());
            return b2e::kExitOk;
        }
    } catch (const b2e::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return b2e::kExitConfigError;
    } catch (const b2e::TrainingAbort& e) {
        std::cerr << "training abort: " << e.what() << "\n";
        write_diagnostics(config, e.what());
        return b2e::kExitTrainingAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return b2e::kExitOk;
}
