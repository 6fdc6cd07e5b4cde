#include "choicepred/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "choicepred/errors.hpp"
#include "choicepred/io.hpp"
#include "choicepred/evaluation.hpp"

#include <nlohmann/json.hpp>

namespace choicepred {

namespace {

constexpr double kBevEvTol = 1e-9;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void require_labels(std::span<const LabeledProblem> problems) {
    for (std::size_t j = 0; j < problems.size(); ++j) {
        if (!problems[j].labeled)
            throw DataError("problem " + std::to_string(j + 1) +
                            " is missing observed B-rates B1..B5");
    }
}

SvrModel train_block(std::span<const LabeledProblem> training, int block,
                     const ScalerSet& scalers, const PipelineConfig& cfg) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    x.reserve(training.size());
    y.reserve(training.size());
    for (const LabeledProblem& lp : training) {
        std::span<const double> prior(lp.b_rates.data(), static_cast<std::size_t>(block - 1));
        x.push_back(assemble_vector(lp.problem, block, prior, scalers, cfg.features).values);
        y.push_back(lp.b_rates[static_cast<std::size_t>(block - 1)]);
    }
    return train(x, y, cfg.kernel, cfg.svr);
}

// B-rate scaler over the observed rates of a training subset.
void refit_b_scaler(ScalerSet& scalers, std::span<const LabeledProblem> training) {
    std::vector<double> rates;
    rates.reserve(training.size() * 5);
    for (const LabeledProblem& lp : training)
        rates.insert(rates.end(), lp.b_rates.begin(), lp.b_rates.end());
    double mean = 0.0, m2 = 0.0, n = 0.0;
    for (double b : rates) {
        n += 1.0;
        const double d = b - mean;
        mean += d / n;
        m2 += d * (b - mean);
    }
    const double sd = std::sqrt(m2 / n);
    if (!(sd > 1e-12)) throw DataError("zero-variance column 'B-rate'; cannot standardize");
    scalers.b_mean = mean;
    scalers.b_std = sd;
}

}  // namespace

double adjust(double b, int block, const Problem& p, const FeatureSet& feats,
              const AdjustConfig& ac, Dominance* out_dominance, bool* out_blend) {
    if (!std::isfinite(b)) throw std::invalid_argument("prediction must be finite");

    Dominance dom = Dominance::Neither;
    const bool amb_first = block == 1 && p.amb == 1;
    if (ac.enable_dominance && !amb_first) {
        const Problem p_eff = effective_problem(p, block);
        dom = dominates(dist_a(p_eff), dist_b(p_eff));
        if (dom == Dominance::ADominates) b = 0.5 * b;
        else if (dom == Dominance::BDominates) b = 0.5 * (b + 1.0);
    }

    bool blend = false;
    if (ac.enable_scpt_blend && block == 1) {
        const bool near_half = std::abs(b - 0.5) < ac.near_half_band;
        const bool flat_ev = std::abs(feats[kBevB] - feats[kEvA]) < kBevEvTol;
        if (near_half || flat_ev) {
            b = ac.model_weight * b + ac.scpt_weight * feats[kScpt];
            blend = true;
        }
    }

    if (out_dominance) *out_dominance = dom;
    if (out_blend) *out_blend = blend;
    return clamp01(b);
}

ModelBundle train_bundle(std::span<const LabeledProblem> estimation, const ScalerSet& scalers,
                         const PipelineConfig& cfg) {
    require_labels(estimation);
    if (estimation.size() < 2) throw DataError("estimation set needs at least 2 problems");

    ModelBundle bundle;
    bundle.scalers = scalers;
    bundle.kernel = cfg.kernel;
    bundle.svr = cfg.svr;
    bundle.features = cfg.features;
    bundle.adjust = cfg.adjust;
    bundle.seed = cfg.seed;
    bundle.scaler_samples = cfg.scaler_samples;
    for (int block = 1; block <= 5; ++block)
        bundle.models[static_cast<std::size_t>(block - 1)] =
            train_block(estimation, block, scalers, cfg);
    return bundle;
}

BlockPrediction predict_problem(const ModelBundle& bundle, const Problem& p,
                                PredictTrace* trace) {
    BlockPrediction out;
    std::vector<double> priors;
    priors.reserve(4);
    for (int block = 1; block <= 5; ++block) {
        const FeatureVector v =
            assemble_vector(p, block, priors, bundle.scalers, bundle.features);
        const double raw = predict(bundle.models[static_cast<std::size_t>(block - 1)], v.values);
        const double clamped = clamp01(raw);

        const Problem p_eff = effective_problem(p, block);
        const FeatureSet feats = compute_features(p_eff, block, bundle.features);
        Dominance dom = Dominance::Neither;
        bool blend = false;
        const double adjusted = adjust(clamped, block, p, feats, bundle.adjust, &dom, &blend);

        out.b_rates[static_cast<std::size_t>(block - 1)] = adjusted;
        priors.push_back(adjusted);

        if (trace) {
            auto& tb = trace->blocks[static_cast<std::size_t>(block - 1)];
            tb.input = v.values;
            tb.features = feats;
            tb.raw = raw;
            tb.clamped = clamped;
            tb.adjusted = adjusted;
            tb.dominance = dom;
            tb.blend_fired = blend;
        }
    }
    return out;
}

std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("fold count must be >= 2");
    if (n < static_cast<std::size_t>(folds))
        throw ConfigError("need at least " + std::to_string(folds) + " problems for " +
                          std::to_string(folds) + "-fold CV, got " + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t k = n; k > 1; --k) {
        const auto r = static_cast<std::size_t>(rng.next_int(0, static_cast<int>(k) - 1));
        std::swap(order[k - 1], order[r]);
    }
    std::vector<int> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos)
        fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));
    return fold;
}

CvReport cross_validate(std::span<const LabeledProblem> estimation, const ScalerSet& scalers,
                        const PipelineConfig& cfg) {
    require_labels(estimation);
    const std::vector<int> fold = assign_folds(estimation.size(), cfg.folds, cfg.seed);

    CvReport report;
    report.fold_msd.reserve(static_cast<std::size_t>(cfg.folds));
    for (int f = 0; f < cfg.folds; ++f) {
        std::vector<LabeledProblem> training;
        std::vector<LabeledProblem> held_out;
        for (std::size_t j = 0; j < estimation.size(); ++j) {
            (fold[j] == f ? held_out : training).push_back(estimation[j]);
        }

        ScalerSet fold_scalers = scalers;
        refit_b_scaler(fold_scalers, training);
        const ModelBundle bundle = train_bundle(training, fold_scalers, cfg);

        std::vector<double> obs, pred;
        obs.reserve(held_out.size() * 5);
        pred.reserve(held_out.size() * 5);
        for (const LabeledProblem& lp : held_out) {
            const BlockPrediction bp = predict_problem(bundle, lp.problem);
            for (int i = 0; i < 5; ++i) {
                obs.push_back(lp.b_rates[static_cast<std::size_t>(i)]);
                pred.push_back(bp.b_rates[static_cast<std::size_t>(i)]);
            }
        }
        report.fold_msd.push_back(msd(obs, pred));
    }
    report.mean_msd = std::accumulate(report.fold_msd.begin(), report.fold_msd.end(), 0.0) /
                      static_cast<double>(report.fold_msd.size());
    return report;
}

void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle) {
    std::filesystem::create_directories(dir);
    for (int block = 1; block <= 5; ++block) {
        save(bundle.models[static_cast<std::size_t>(block - 1)],
             dir / ("block" + std::to_string(block) + ".svr"));
        save_scaler(dir / ("scaler_block" + std::to_string(block) + ".txt"),
                    bundle.scalers.per_block[static_cast<std::size_t>(block - 1)]);
    }
    Scaler b_scaler;
    b_scaler.mean = {bundle.scalers.b_mean};
    b_scaler.stddev = {bundle.scalers.b_std};
    save_scaler(dir / "scaler_brate.txt", b_scaler);

    nlohmann::ordered_json manifest;
    manifest["format"] = "choicepred-bundle";
    manifest["version"] = 1;
    manifest["kernel"] = {{"degree", bundle.kernel.degree},
                          {"scale", bundle.kernel.scale},
                          {"offset", bundle.kernel.offset}};
    manifest["svr"] = {{"C", bundle.svr.c},
                       {"epsilon", bundle.svr.epsilon},
                       {"tol", bundle.svr.tol},
                       {"max_passes", bundle.svr.max_passes}};
    manifest["cpt"] = {{"alpha", bundle.features.cpt.alpha},
                       {"beta", bundle.features.cpt.beta},
                       {"gamma", bundle.features.cpt.gamma},
                       {"delta", bundle.features.cpt.delta},
                       {"lambda", bundle.features.cpt.lambda}};
    manifest["scpt_theta"] = bundle.features.scpt_theta;
    manifest["adjust"] = {{"near_half_band", bundle.adjust.near_half_band},
                          {"model_weight", bundle.adjust.model_weight},
                          {"scpt_weight", bundle.adjust.scpt_weight}};
    manifest["seed"] = bundle.seed;
    manifest["scaler_samples"] = bundle.scaler_samples;

    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream file(dir / "manifest.json");
    if (!file) throw DataError("cannot read bundle manifest in " + dir.string());
    nlohmann::json manifest;
    try {
        file >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed bundle manifest in " + dir.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != "choicepred-bundle")
        throw DataError("not a model bundle: " + dir.string());
    if (manifest.value("version", 0) != 1)
        throw DataError("unsupported bundle version in " + dir.string());

    ModelBundle bundle;
    try {
        const auto& k = manifest.at("kernel");
        bundle.kernel.degree = k.at("degree").get<int>();
        bundle.kernel.scale = k.at("scale").get<double>();
        bundle.kernel.offset = k.at("offset").get<double>();
        const auto& s = manifest.at("svr");
        bundle.svr.c = s.at("C").get<double>();
        bundle.svr.epsilon = s.at("epsilon").get<double>();
        bundle.svr.tol = s.at("tol").get<double>();
        bundle.svr.max_passes = s.at("max_passes").get<int>();
        const auto& c = manifest.at("cpt");
        bundle.features.cpt.alpha = c.at("alpha").get<double>();
        bundle.features.cpt.beta = c.at("beta").get<double>();
        bundle.features.cpt.gamma = c.at("gamma").get<double>();
        bundle.features.cpt.delta = c.at("delta").get<double>();
        bundle.features.cpt.lambda = c.at("lambda").get<double>();
        bundle.features.scpt_theta = manifest.at("scpt_theta").get<double>();
        const auto& a = manifest.at("adjust");
        bundle.adjust.near_half_band = a.at("near_half_band").get<double>();
        bundle.adjust.model_weight = a.at("model_weight").get<double>();
        bundle.adjust.scpt_weight = a.at("scpt_weight").get<double>();
        bundle.seed = manifest.value("seed", std::uint64_t{0});
        bundle.scaler_samples = manifest.value("scaler_samples", 0);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed bundle manifest in " + dir.string() + ": " + e.what());
    }

    for (int block = 1; block <= 5; ++block) {
        bundle.models[static_cast<std::size_t>(block - 1)] =
            load(dir / ("block" + std::to_string(block) + ".svr"));
        bundle.scalers.per_block[static_cast<std::size_t>(block - 1)] =
            load_scaler(dir / ("scaler_block" + std::to_string(block) + ".txt"));
    }
    const Scaler b_scaler = load_scaler(dir / "scaler_brate.txt");
    if (b_scaler.mean.size() != 1)
        throw DataError("malformed B-rate scaler in " + dir.string());
    bundle.scalers.b_mean = b_scaler.mean[0];
    bundle.scalers.b_std = b_scaler.stddev[0];
    return bundle;
}

}  // namespace choicepred
