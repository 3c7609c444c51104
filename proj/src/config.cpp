#include "b2e/config.hpp"

#include "b2e/oracle.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace b2e {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& scope,
                const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key: " +
                              (scope.empty() ? it.key() : scope + "." + it.key()));
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_pendulum(const json& j, PendulumParams& p) {
    check_keys(j, "pendulum",
               {"gravity", "mass", "length", "dt", "max_torque", "torque_levels",
                "omega_max"});
    read(j, "gravity", p.gravity);
    read(j, "mass", p.mass);
    read(j, "length", p.length);
    read(j, "dt", p.dt);
    read(j, "max_torque", p.max_torque);
    read(j, "torque_levels", p.torque_levels);
    read(j, "omega_max", p.omega_max);
}

void parse_train(const json& j, TrainConfig& t) {
    check_keys(j, "train",
               {"total_episodes", "episodes_per_round", "step_cap", "minibatch",
                "max_epochs", "max_passes", "buffer_capacity"});
    read(j, "total_episodes", t.total_episodes);
    read(j, "episodes_per_round", t.episodes_per_round);
    read(j, "step_cap", t.step_cap);
    read(j, "minibatch", t.minibatch);
    read(j, "max_epochs", t.max_epochs);
    read(j, "max_passes", t.max_passes);
    read(j, "buffer_capacity", t.buffer_capacity);
}

void parse_sbe(const json& j, SbeConfig& s) {
    check_keys(j, "sbe",
               {"gamma", "target_sync_episodes", "total_episodes", "step_cap",
                "minibatch", "buffer_capacity"});
    read(j, "gamma", s.gamma);
    read(j, "target_sync_episodes", s.target_sync_episodes);
    read(j, "total_episodes", s.total_episodes);
    read(j, "step_cap", s.step_cap);
    read(j, "minibatch", s.minibatch);
    read(j, "buffer_capacity", s.buffer_capacity);
}

}  // namespace

void RunConfig::validate() const {
    static const std::set<std::string> algos = {"b2e", "sbe", "oracle", "atlas",
                                               "eval"};
    if (!algos.count(algorithm))
        throw ConfigError("config key 'algorithm' must be one of b2e, sbe, "
                          "oracle, atlas, eval");
    try {
        pendulum.validate();
        train.validate();
        sbe.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (seeds.empty()) throw ConfigError("config key 'seeds' must be nonempty");
    if (resolution < 51)
        throw ConfigError("config key 'resolution' must be >= 51");
    if (refine_resolution != 0 && refine_resolution < 51)
        throw ConfigError("config key 'refine_resolution' must be 0 or >= 51");
    if (eval_episodes < 1)
        throw ConfigError("config key 'eval_episodes' must be >= 1");
    if (eval_horizon < 1)
        throw ConfigError("config key 'eval_horizon' must be >= 1");
    if (atlas_instances < 1 || atlas_max_states < 2 || atlas_max_actions < 1)
        throw ConfigError("config keys 'atlas_*' out of range");
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    check_keys(j, "",
               {"algorithm", "pendulum", "train", "sbe", "seeds", "out_dir",
                "resolution", "refine_resolution", "eta_list", "eval_episodes",
                "eval_horizon", "init_theta_box", "init_omega_box",
                "atlas_instances", "atlas_max_states", "atlas_max_actions",
                "atlas_seed"});
    RunConfig c;
    try {
        read(j, "algorithm", c.algorithm);
        if (j.contains("pendulum")) parse_pendulum(j.at("pendulum"), c.pendulum);
        if (j.contains("train")) parse_train(j.at("train"), c.train);
        if (j.contains("sbe")) parse_sbe(j.at("sbe"), c.sbe);
        read(j, "seeds", c.seeds);
        read(j, "out_dir", c.out_dir);
        read(j, "resolution", c.resolution);
        read(j, "refine_resolution", c.refine_resolution);
        read(j, "eta_list", c.eta_list);
        read(j, "eval_episodes", c.eval_episodes);
        read(j, "eval_horizon", c.eval_horizon);
        read(j, "init_theta_box", c.init_theta_box);
        read(j, "init_omega_box", c.init_omega_box);
        read(j, "atlas_instances", c.atlas_instances);
        read(j, "atlas_max_states", c.atlas_max_states);
        read(j, "atlas_max_actions", c.atlas_max_actions);
        read(j, "atlas_seed", c.atlas_seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

void apply_override(RunConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    // Round-trip through JSON so overrides share the strict parser.
    json j = json::parse(dump_run_config(config));
    json* slot = &j;
    std::string remaining = key;
    for (auto dot = remaining.find('.'); dot != std::string::npos;
         dot = remaining.find('.')) {
        const std::string head = remaining.substr(0, dot);
        if (!slot->contains(head))
            throw ConfigError("unknown config key: " + key);
        slot = &(*slot)[head];
        remaining = remaining.substr(dot + 1);
    }
    if (!slot->contains(remaining))
        throw ConfigError("unknown config key: " + key);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // bare strings allowed
    }
    (*slot)[remaining] = parsed;
    config = parse_run_config(j.dump());
}

std::string dump_run_config(const RunConfig& c) {
    json j;
    j["algorithm"] = c.algorithm;
    j["pendulum"] = {{"gravity", c.pendulum.gravity},
                     {"mass", c.pendulum.mass},
                     {"length", c.pendulum.length},
                     {"dt", c.pendulum.dt},
                     {"max_torque", c.pendulum.max_torque},
                     {"torque_levels", c.pendulum.torque_levels},
                     {"omega_max", c.pendulum.omega_max}};
    j["train"] = {{"total_episodes", c.train.total_episodes},
                  {"episodes_per_round", c.train.episodes_per_round},
                  {"step_cap", c.train.step_cap},
                  {"minibatch", c.train.minibatch},
                  {"max_epochs", c.train.max_epochs},
                  {"max_passes", c.train.max_passes},
                  {"buffer_capacity", c.train.buffer_capacity}};
    j["sbe"] = {{"gamma", c.sbe.gamma},
                {"target_sync_episodes", c.sbe.target_sync_episodes},
                {"total_episodes", c.sbe.total_episodes},
                {"step_cap", c.sbe.step_cap},
                {"minibatch", c.sbe.minibatch},
                {"buffer_capacity", c.sbe.buffer_capacity}};
    j["seeds"] = c.seeds;
    j["out_dir"] = c.out_dir;
    j["resolution"] = c.resolution;
    j["refine_resolution"] = c.refine_resolution;
    j["eta_list"] = c.eta_list;
    j["eval_episodes"] = c.eval_episodes;
    j["eval_horizon"] = c.eval_horizon;
    j["init_theta_box"] = c.init_theta_box;
    j["init_omega_box"] = c.init_omega_box;
    j["atlas_instances"] = c.atlas_instances;
    j["atlas_max_states"] = c.atlas_max_states;
    j["atlas_max_actions"] = c.atlas_max_actions;
    j["atlas_seed"] = c.atlas_seed;
    return j.dump(2);
}

std::string config_hash(const RunConfig& config) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a_hash(dump_run_config(config))));
    return buf;
}

}  // namespace b2e
