#include "choicepred/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "choicepred/errors.hpp"

namespace choicepred {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot read config file: " + path.string());
    nlohmann::json j;
    try {
        file >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config file " + path.string() + ": " + e.what());
    }

    RunConfig cfg;
    try {
        read_field(j, "seed", cfg.seed);
        read_field(j, "folds", cfg.folds);
        read_field(j, "scaler_samples", cfg.scaler_samples);
        if (j.contains("kernel")) {
            const auto& k = j.at("kernel");
            read_field(k, "degree", cfg.kernel.degree);
            read_field(k, "scale", cfg.kernel.scale);
            read_field(k, "offset", cfg.kernel.offset);
        }
        if (j.contains("svr")) {
            const auto& s = j.at("svr");
            read_field(s, "C", cfg.svr.c);
            read_field(s, "epsilon", cfg.svr.epsilon);
            read_field(s, "tol", cfg.svr.tol);
            read_field(s, "max_passes", cfg.svr.max_passes);
        }
        if (j.contains("cpt")) {
            const auto& c = j.at("cpt");
            read_field(c, "alpha", cfg.features.cpt.alpha);
            read_field(c, "beta", cfg.features.cpt.beta);
            read_field(c, "gamma", cfg.features.cpt.gamma);
            read_field(c, "delta", cfg.features.cpt.delta);
            read_field(c, "lambda", cfg.features.cpt.lambda);
        }
        read_field(j, "scpt_theta", cfg.features.scpt_theta);
        if (j.contains("adjust")) {
            const auto& a = j.at("adjust");
            read_field(a, "near_half_band", cfg.adjust.near_half_band);
            read_field(a, "model_weight", cfg.adjust.model_weight);
            read_field(a, "scpt_weight", cfg.adjust.scpt_weight);
        }
        read_field(j, "c_grid", cfg.c_grid);
        read_field(j, "eps_grid", cfg.eps_grid);
        read_field(j, "data", cfg.data);
        read_field(j, "bundle", cfg.bundle);
        read_field(j, "out", cfg.out);
        read_field(j, "checks", cfg.checks);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config file " + path.string() + ": " + e.what());
    }
    return cfg;
}

void validate(const RunConfig& cfg) {
    if (cfg.folds < 2) throw ConfigError("fold count must be >= 2, got " + std::to_string(cfg.folds));
    if (cfg.scaler_samples < 1000)
        throw ConfigError("scaler sample count must be >= 1000, got " +
                          std::to_string(cfg.scaler_samples));
    try {
        validate(cfg.kernel);
        validate(cfg.features.cpt);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(cfg.svr.c > 0.0)) throw ConfigError("C must be positive");
    if (!(cfg.svr.epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    if (!(cfg.svr.tol > 0.0)) throw ConfigError("tol must be positive");
    if (cfg.svr.max_passes < 1) throw ConfigError("max_passes must be >= 1");
    if (!(cfg.features.scpt_theta > 0.0)) throw ConfigError("scpt_theta must be positive");
    if (cfg.c_grid.empty() || cfg.eps_grid.empty())
        throw ConfigError("hyperparameter grids must not be empty");
    for (double c : cfg.c_grid)
        if (!(c > 0.0)) throw ConfigError("c_grid values must be positive");
    for (double e : cfg.eps_grid)
        if (!(e >= 0.0)) throw ConfigError("eps_grid values must be non-negative");
    if (!(cfg.adjust.near_half_band >= 0.0)) throw ConfigError("near_half_band must be >= 0");
    if (!(cfg.adjust.model_weight >= 0.0 && cfg.adjust.scpt_weight >= 0.0))
        throw ConfigError("blend weights must be non-negative");
}

PipelineConfig to_pipeline_config(const RunConfig& cfg) {
    PipelineConfig p;
    p.kernel = cfg.kernel;
    p.svr = cfg.svr;
    p.features = cfg.features;
    p.adjust = cfg.adjust;
    p.seed = cfg.seed;
    p.folds = cfg.folds;
    p.scaler_samples = cfg.scaler_samples;
    p.c_grid = cfg.c_grid;
    p.eps_grid = cfg.eps_grid;
    return p;
}

}  // namespace choicepred
