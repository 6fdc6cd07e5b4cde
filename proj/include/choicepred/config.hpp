#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "choicepred/pipeline.hpp"

namespace choicepred {

// Everything a command run depends on besides the input files. Loaded from a
// JSON file, then overridden by command-line flags.
struct RunConfig {
    std::uint64_t seed = 1;
    int folds = 10;
    int scaler_samples = 100000;
    KernelSpec kernel;
    SvrConfig svr;
    FeatureConfig features;
    AdjustConfig adjust;
    std::vector<double> c_grid{0.3, 1.0, 3.0};
    std::vector<double> eps_grid{0.02, 0.05, 0.1};

    // Optional paths; flags take precedence.
    std::string data;
    std::string bundle;
    std::string out;
    std::string checks;
};

RunConfig load_run_config(const std::filesystem::path& path);

// Throws ConfigError on out-of-range values (folds < 2, scaler_samples <
// 1000, bad kernel/SVR/CPT parameters, empty grids).
void validate(const RunConfig& cfg);

PipelineConfig to_pipeline_config(const RunConfig& cfg);

}  // namespace choicepred
