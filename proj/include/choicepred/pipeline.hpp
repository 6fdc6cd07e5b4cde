#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "choicepred/features.hpp"
#include "choicepred/problem.hpp"
#include "choicepred/svr.hpp"

namespace choicepred {

struct LabeledProblem {
    Problem problem;
    std::array<double, 5> b_rates{};
    bool labeled = false;
};

struct AdjustConfig {
    double near_half_band = 0.025;  // |B1 - 0.5| band that triggers the SCPT blend
    double model_weight = 0.7;
    double scpt_weight = 0.3;
    // Test hooks; both on in production use.
    bool enable_dominance = true;
    bool enable_scpt_blend = true;
};

struct PipelineConfig {
    KernelSpec kernel;
    SvrConfig svr;
    FeatureConfig features;
    AdjustConfig adjust;
    std::uint64_t seed = 1;
    int folds = 10;
    int scaler_samples = 100000;
    std::vector<double> c_grid{0.3, 1.0, 3.0};
    std::vector<double> eps_grid{0.02, 0.05, 0.1};
};

// Five block models plus everything needed to reproduce their inputs.
struct ModelBundle {
    std::array<SvrModel, 5> models;
    ScalerSet scalers;
    KernelSpec kernel;
    SvrConfig svr;
    FeatureConfig features;
    AdjustConfig adjust;
    // Provenance, recorded in the manifest.
    std::uint64_t seed = 0;
    int scaler_samples = 0;
};

struct BlockPrediction {
    std::array<double, 5> b_rates{};
};

struct PredictTrace {
    struct Block {
        std::vector<double> input;  // standardized model input
        FeatureSet features{};      // features of the effective-form problem
        double raw = 0.0;           // SVR output
        double clamped = 0.0;       // raw clipped to [0,1]
        double adjusted = 0.0;      // final B-rate
        Dominance dominance = Dominance::Neither;
        bool blend_fired = false;
    };
    std::array<Block, 5> blocks;
};

// Trains the five per-block models on the estimation set; block i's inputs
// carry the observed B-rates of blocks 1..i-1 (teacher forcing). Every
// problem must be labeled.
ModelBundle train_bundle(std::span<const LabeledProblem> estimation, const ScalerSet& scalers,
                         const PipelineConfig& cfg);

// Sequential prediction: block i's input carries the adjusted predictions of
// blocks 1..i-1. Each block output is clipped to [0,1], then adjusted.
BlockPrediction predict_problem(const ModelBundle& bundle, const Problem& p,
                                PredictTrace* trace = nullptr);

// Behavioral adjustments on one block prediction. `b` must already lie in
// [0,1]. (a) when one option first-order dominates the other in the
// effective form, average with the trivial choice (skipped at block 1 for
// ambiguous problems, where B's distribution is unknown); (b) at block 1,
// when the prediction is near 0.5 or BevB equals EvA, blend toward the SCPT
// choice probability.
double adjust(double b, int block, const Problem& p, const FeatureSet& feats,
              const AdjustConfig& ac, Dominance* out_dominance = nullptr,
              bool* out_blend = nullptr);

// Deterministic problem-level fold assignment: n fold ids in [0, folds).
std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed);

struct CvReport {
    std::vector<double> fold_msd;
    double mean_msd = 0.0;
};

// Problem-level k-fold cross-validation: per fold, train on the remainder
// (including the fold's B-rate scaler), predict the held-out problems
// sequentially, and score MSD. The per-block entry scalers are shared; they
// come from sampled problems, not from the estimation data.
CvReport cross_validate(std::span<const LabeledProblem> estimation, const ScalerSet& scalers,
                        const PipelineConfig& cfg);

void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace choicepred
