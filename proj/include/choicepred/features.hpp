#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "choicepred/problem.hpp"

namespace choicepred {

// Prospect-theory value/weighting parameters: alpha/beta bend the value
// function for gains/losses, gamma/delta bend the probability weights,
// lambda scales losses.
struct CptParams {
    double alpha = 0.77;
    double beta = 0.9;
    double gamma = 0.79;
    double delta = 0.87;
    double lambda = 1.0023;
};

void validate(const CptParams& params);

struct FeatureConfig {
    CptParams cpt;
    double scpt_theta = 1.0;  // noise scale of the stochastic-CPT choice rule
};

// Per-block probability distortion: rare probabilities shrink with the block
// index, near-certain ones grow. Identity at block 1.
double effective_probability(double p, int block);

// Copy of p with pha and phb replaced by their effective forms at `block`.
Problem effective_problem(const Problem& p, int block);

// Value function: o^alpha for gains, -lambda*|o|^beta for losses.
double cpt_value(double outcome, const CptParams& params);

// Probability weighting; curvature gamma for non-negative outcomes, delta
// for negative ones.
double cpt_weight(double p, bool gain_outcome, const CptParams& params);

// Sum of V(o)*pi(p) over entries, weights applied to individual
// probabilities.
double cpt_ev(const OutcomeDistribution& d, const CptParams& params);

// Rank-dependent CPT value: decumulative weighting for gains, cumulative for
// losses.
double cpt_rank_ev(const OutcomeDistribution& d, const CptParams& params);

// Best estimate of option B's expected value at `block`. For ambiguous
// problems in the first block this is a pessimistic blend of the uniform
// outcome mean, option A's expected value and B's worst outcome; otherwise
// the true mean of dist_b.
double bev_b(const Problem& p_eff, int block, double ev_a);

// Distribution substituted for dist_b when option B is ambiguous in the
// first block: lowest outcome weighted so the mean matches `bev` (clamped to
// a valid probability), remaining mass split equally over the other
// outcomes.
OutcomeDistribution ambiguous_dist_b(const Problem& p_eff, double bev);

// Probability of choosing B under the stochastic-CPT rule:
// logistic((U_B - U_A) / theta) on rank-dependent CPT values.
double scpt_choice(const Problem& p_eff, const CptParams& params, double theta);

enum FeatureIndex {
    kIsGain = 0,
    kIsLoss,
    kEvA,
    kBevB,
    kBevAPt,
    kBevBPt,
    kSignMax,
    kRatioMin,
    kBevBminA,
    kBevBminAPt,
    kBevBminAUnif,
    kBevBminASign,
    kBisBetter,
    kScpt,
    kVarBminA,
    kEntBminA,
    kFeatureCount
};

using FeatureSet = std::array<double, kFeatureCount>;

// The 16 behavioral features of an effective-form problem at `block`.
FeatureSet compute_features(const Problem& p_eff, int block, const FeatureConfig& cfg);

inline constexpr int kRawEntryCount = 24;

// Name of raw vector entry idx in [0, 24): the 8 problem parameters followed
// by the 16 features.
const std::string& entry_name(int idx);

// Raw (unstandardized) 24-entry representation of p at `block`: the problem
// parameters ha,pha,la,hb,phb,lb,amb,corr followed by the features of the
// effective-form problem.
std::array<double, kRawEntryCount> raw_entries(const Problem& p, int block,
                                               const FeatureConfig& cfg);

struct FeatureVector {
    std::vector<double> values;
    bool standardized = false;
};

// Per-entry affine normalization to zero mean / unit variance.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// One 24-entry scaler per block plus the shared B-rate scaler.
struct ScalerSet {
    std::array<Scaler, 5> per_block;
    double b_mean = 0.0;
    double b_std = 1.0;
};

// Fits the per-block entry scalers from sampled problems and the B-rate
// scaler from the observed estimation B-rates. Throws DataError when a
// column has zero variance, naming the column.
ScalerSet fit_scalers(std::span<const Problem> samples,
                      std::span<const double> estimation_b_rates,
                      const FeatureConfig& cfg);

// Full model input for p at `block`: the 24 standardized entries followed by
// the i-1 standardized prior B-rates. Throws std::invalid_argument when
// prior_b has the wrong length.
FeatureVector assemble_vector(const Problem& p, int block, std::span<const double> prior_b,
                              const ScalerSet& scalers, const FeatureConfig& cfg);

// Applies the block scaler (entries) and B-rate scaler (trailing entries) in
// place. Throws std::logic_error when the vector is already standardized.
void standardize(FeatureVector& v, int block, const ScalerSet& scalers);

void save_scaler(const std::filesystem::path& path, const Scaler& scaler);
Scaler load_scaler(const std::filesystem::path& path);

}  // namespace choicepred
