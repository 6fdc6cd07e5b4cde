#include "choicepred/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "choicepred/errors.hpp"
#include "choicepred/io.hpp"

namespace choicepred {

namespace {

constexpr double kStdFloor = 1e-12;

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

void check_block(int block) {
    if (block < 1 || block > 5)
        throw std::invalid_argument("block index must lie in 1..5, got " + std::to_string(block));
}

// Ambiguity hides option B's probabilities from the decision maker until
// feedback arrives, so several block-1 features swap dist_b for estimates.
bool ambiguous_first_block(const Problem& p, int block) {
    return block == 1 && p.amb == 1;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void validate(const CptParams& params) {
    if (!(params.alpha > 0.0 && params.beta > 0.0 && params.gamma > 0.0 &&
          params.delta > 0.0 && params.lambda > 0.0))
        throw std::invalid_argument("CPT parameters must all be strictly positive");
}

double effective_probability(double p, int block) {
    check_block(block);
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("probability must lie in [0,1]");
    const double i = static_cast<double>(block);
    if (p <= 0.02) return p / i;
    if (p >= 0.98) return p + (1.0 - 1.0 / i) * (1.0 - p);
    return p;
}

Problem effective_problem(const Problem& p, int block) {
    Problem eff = p;
    eff.pha = effective_probability(p.pha, block);
    eff.phb = effective_probability(p.phb, block);
    return eff;
}

double cpt_value(double outcome, const CptParams& params) {
    if (outcome >= 0.0) return std::pow(outcome, params.alpha);
    return -params.lambda * std::pow(-outcome, params.beta);
}

double cpt_weight(double p, bool gain_outcome, const CptParams& params) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("probability must lie in [0,1]");
    const double c = gain_outcome ? params.gamma : params.delta;
    const double pc = std::pow(p, c);
    const double denom = std::pow(pc + std::pow(1.0 - p, c), 1.0 / c);
    return pc / denom;
}

double cpt_ev(const OutcomeDistribution& d, const CptParams& params) {
    double v = 0.0;
    for (const auto& e : d.entries())
        v += cpt_value(e.outcome, params) * cpt_weight(e.prob, e.outcome >= 0.0, params);
    return v;
}

double cpt_rank_ev(const OutcomeDistribution& d, const CptParams& params) {
    const auto& entries = d.entries();
    const std::size_t n = entries.size();
    double v = 0.0;

    // Gains: weight by differences of the transformed decumulative
    // distribution, walking from the best outcome down.
    double tail = 0.0;
    double w_prev = 0.0;  // pi(P(X > o)) of the entry above
    for (std::size_t k = n; k-- > 0;) {
        if (entries[k].outcome < 0.0) break;
        tail += entries[k].prob;
        const double w = cpt_weight(std::min(tail, 1.0), true, params);
        v += cpt_value(entries[k].outcome, params) * (w - w_prev);
        w_prev = w;
    }

    // Losses: cumulative from the worst outcome up.
    double head = 0.0;
    w_prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (entries[k].outcome >= 0.0) break;
        head += entries[k].prob;
        const double w = cpt_weight(std::min(head, 1.0), false, params);
        v += cpt_value(entries[k].outcome, params) * (w - w_prev);
        w_prev = w;
    }
    return v;
}

double bev_b(const Problem& p_eff, int block, double ev_a) {
    check_block(block);
    const OutcomeDistribution b = dist_b(p_eff);
    if (ambiguous_first_block(p_eff, block))
        return 0.48 * b.uniform_mean() + 0.48 * ev_a + 0.04 * b.min_outcome();
    return b.mean();
}

OutcomeDistribution ambiguous_dist_b(const Problem& p_eff, double bev) {
    const OutcomeDistribution b = dist_b(p_eff);
    const auto& entries = b.entries();
    const std::size_t s = entries.size();
    if (s < 2) return b;

    double rest_mean = 0.0;
    for (std::size_t j = 1; j < s; ++j) rest_mean += entries[j].outcome;
    rest_mean /= static_cast<double>(s - 1);

    const double denom = entries[0].outcome - rest_mean;
    std::vector<OutcomeEntry> out;
    out.reserve(s);
    if (std::abs(denom) < 1e-12) {
        // Degenerate geometry; fall back to a uniform distribution.
        for (const auto& e : entries) out.push_back({e.outcome, 1.0 / static_cast<double>(s)});
        return OutcomeDistribution::from_entries(std::move(out));
    }

    const double p1 = std::clamp((bev - rest_mean) / denom, 0.0, 1.0);
    out.push_back({entries[0].outcome, p1});
    for (std::size_t j = 1; j < s; ++j)
        out.push_back({entries[j].outcome, (1.0 - p1) / static_cast<double>(s - 1)});
    return OutcomeDistribution::from_entries(std::move(out));
}

double scpt_choice(const Problem& p_eff, const CptParams& params, double theta) {
    if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
    const double ua = cpt_rank_ev(dist_a(p_eff), params);
    const double ub = cpt_rank_ev(dist_b(p_eff), params);
    return logistic((ub - ua) / theta);
}

FeatureSet compute_features(const Problem& p_eff, int block, const FeatureConfig& cfg) {
    check_block(block);
    const OutcomeDistribution a = dist_a(p_eff);
    const OutcomeDistribution b = dist_b(p_eff);

    const bool ambiguous = ambiguous_first_block(p_eff, block);

    FeatureSet f{};

    // Gain/loss character of the problem: probability mass on the relevant
    // sign, averaged over the two options.
    double gain_mass = 0.0, loss_mass = 0.0;
    bool any_positive = false, any_negative = false;
    for (const OutcomeDistribution* d : {&a, &b}) {
        for (const auto& e : d->entries()) {
            if (e.outcome >= 0.0) gain_mass += 0.5 * e.prob;
            if (e.outcome <= 0.0) loss_mass += 0.5 * e.prob;
            any_positive = any_positive || e.outcome > 0.0;
            any_negative = any_negative || e.outcome < 0.0;
        }
    }
    f[kIsGain] = (gain_mass > 0.65 && any_positive) ? 1.0 : 0.0;
    f[kIsLoss] = (loss_mass > 0.65 && any_negative) ? 1.0 : 0.0;

    const double ev_a = a.mean();
    f[kEvA] = ev_a;
    f[kBevB] = bev_b(p_eff, block, ev_a);

    const CptParams& cpt = cfg.cpt;
    f[kBevAPt] = cpt_ev(a, cpt);

    // Under first-block ambiguity the decision maker reasons over the
    // estimated distribution, not the objective one.
    const OutcomeDistribution b_est = ambiguous ? ambiguous_dist_b(p_eff, f[kBevB]) : b;
    f[kBevBPt] = cpt_ev(b_est, cpt);

    f[kSignMax] = sign_of(std::max(a.max_outcome(), b.max_outcome()));

    const double min_a = a.min_outcome();
    const double min_b = b.min_outcome();
    if (sign_of(min_a) == sign_of(min_b)) {
        const double lo = std::min(std::abs(min_a), std::abs(min_b));
        const double hi = std::max(std::abs(min_a), std::abs(min_b));
        f[kRatioMin] = (hi == 0.0) ? 1.0 : lo / hi;  // both zero: treat as equal magnitudes
    } else {
        f[kRatioMin] = 0.0;
    }

    f[kBevBminA] = f[kBevB] - f[kEvA];
    f[kBevBminAPt] = f[kBevBPt] - f[kBevAPt];
    f[kBevBminAUnif] = b.uniform_mean() - a.uniform_mean();

    const double range = std::max(a.max_outcome(), b.max_outcome()) -
                         std::min(min_a, min_b);
    double sign_b = 0.0, sign_a = 0.0;
    for (const auto& e : b.entries()) sign_b += sign_of(e.outcome) * e.prob;
    for (const auto& e : a.entries()) sign_a += sign_of(e.outcome) * e.prob;
    f[kBevBminASign] = range * (sign_b - sign_a);

    // P(B pays strictly more than A) under independent draws.
    double b_better = 0.0;
    for (const auto& eb : b.entries()) b_better += eb.prob * a.prob_below(eb.outcome);
    f[kBisBetter] = b_better;

    f[kScpt] = scpt_choice(p_eff, cpt, cfg.scpt_theta);
    f[kVarBminA] = b_est.variance() - a.variance();
    f[kEntBminA] = b.entropy() - a.entropy();
    return f;
}

const std::string& entry_name(int idx) {
    static const std::array<std::string, kRawEntryCount> names = {
        "Ha",        "pHa",       "La",           "Hb",           "pHb",       "Lb",
        "Amb",       "Corr",      "IsGain",       "IsLoss",       "EvA",       "BevB",
        "BevA_pt",   "BevB_pt",   "SignMax",      "RatioMin",     "BevBminA",  "BevBminA_pt",
        "BevBminA_unif", "BevBminA_sign", "BisBetter", "SCPT",    "VarBminA",  "EntBminA"};
    if (idx < 0 || idx >= kRawEntryCount)
        throw std::invalid_argument("entry index out of range");
    return names[static_cast<std::size_t>(idx)];
}

std::array<double, kRawEntryCount> raw_entries(const Problem& p, int block,
                                               const FeatureConfig& cfg) {
    const Problem p_eff = effective_problem(p, block);
    const FeatureSet feats = compute_features(p_eff, block, cfg);

    std::array<double, kRawEntryCount> out{};
    out[0] = p.ha;
    out[1] = p.pha;
    out[2] = p.la;
    out[3] = p.hb;
    out[4] = p.phb;
    out[5] = p.lb;
    out[6] = p.amb;
    out[7] = p.corr;
    std::copy(feats.begin(), feats.end(), out.begin() + 8);
    return out;
}

ScalerSet fit_scalers(std::span<const Problem> samples,
                      std::span<const double> estimation_b_rates,
                      const FeatureConfig& cfg) {
    if (samples.empty()) throw std::invalid_argument("scaler fit needs at least one sample");
    if (estimation_b_rates.empty())
        throw std::invalid_argument("scaler fit needs observed estimation B-rates");

    ScalerSet set;
    for (int block = 1; block <= 5; ++block) {
        std::array<double, kRawEntryCount> mean{};
        std::array<double, kRawEntryCount> m2{};
        double count = 0.0;
        for (const Problem& p : samples) {
            const auto row = raw_entries(p, block, cfg);
            count += 1.0;
            for (int k = 0; k < kRawEntryCount; ++k) {
                const double d = row[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
                mean[static_cast<std::size_t>(k)] += d / count;
                m2[static_cast<std::size_t>(k)] += d * (row[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)]);
            }
        }
        Scaler& scaler = set.per_block[static_cast<std::size_t>(block - 1)];
        scaler.mean.resize(kRawEntryCount);
        scaler.stddev.resize(kRawEntryCount);
        for (int k = 0; k < kRawEntryCount; ++k) {
            const double var = m2[static_cast<std::size_t>(k)] / count;
            const double sd = std::sqrt(var);
            if (!(sd > kStdFloor))
                throw DataError("zero-variance column '" + entry_name(k) + "' at block " +
                                std::to_string(block) + "; cannot standardize");
            scaler.mean[static_cast<std::size_t>(k)] = mean[static_cast<std::size_t>(k)];
            scaler.stddev[static_cast<std::size_t>(k)] = sd;
        }
    }

    double b_mean = 0.0, b_m2 = 0.0, n = 0.0;
    for (double b : estimation_b_rates) {
        n += 1.0;
        const double d = b - b_mean;
        b_mean += d / n;
        b_m2 += d * (b - b_mean);
    }
    const double b_sd = std::sqrt(b_m2 / n);
    if (!(b_sd > kStdFloor))
        throw DataError("zero-variance column 'B-rate'; cannot standardize");
    set.b_mean = b_mean;
    set.b_std = b_sd;
    return set;
}

void standardize(FeatureVector& v, int block, const ScalerSet& scalers) {
    check_block(block);
    if (v.standardized) throw std::logic_error("feature vector is already standardized");
    const Scaler& s = scalers.per_block[static_cast<std::size_t>(block - 1)];
    if (v.values.size() < static_cast<std::size_t>(kRawEntryCount))
        throw std::invalid_argument("feature vector too short to standardize");
    for (std::size_t k = 0; k < static_cast<std::size_t>(kRawEntryCount); ++k)
        v.values[k] = (v.values[k] - s.mean[k]) / s.stddev[k];
    for (std::size_t k = kRawEntryCount; k < v.values.size(); ++k)
        v.values[k] = (v.values[k] - scalers.b_mean) / scalers.b_std;
    v.standardized = true;
}

FeatureVector assemble_vector(const Problem& p, int block, std::span<const double> prior_b,
                              const ScalerSet& scalers, const FeatureConfig& cfg) {
    check_block(block);
    if (prior_b.size() != static_cast<std::size_t>(block - 1))
        throw std::invalid_argument("expected " + std::to_string(block - 1) +
                                    " prior B-rates for block " + std::to_string(block) +
                                    ", got " + std::to_string(prior_b.size()));
    FeatureVector v;
    const auto raw = raw_entries(p, block, cfg);
    v.values.assign(raw.begin(), raw.end());
    v.values.insert(v.values.end(), prior_b.begin(), prior_b.end());
    standardize(v, block, scalers);
    return v;
}

void save_scaler(const std::filesystem::path& path, const Scaler& scaler) {
    std::ostringstream out;
    out << "scaler v1 entries " << scaler.mean.size() << "\n";
    char buf[96];
    for (std::size_t k = 0; k < scaler.mean.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g\n", k, scaler.mean[k], scaler.stddev[k]);
        out << buf;
    }
    write_file_atomic(path, out.str());
}

Scaler load_scaler(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw DataError("cannot read scaler file: " + path.string());
    std::string magic, version, entries_word;
    std::size_t count = 0;
    if (!(file >> magic >> version >> entries_word >> count) || magic != "scaler" ||
        entries_word != "entries")
        throw DataError("malformed scaler file: " + path.string());
    if (version != "v1")
        throw DataError("unsupported scaler version '" + version + "' in " + path.string());
    Scaler s;
    s.mean.resize(count);
    s.stddev.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::size_t idx = 0;
        if (!(file >> idx >> s.mean[k] >> s.stddev[k]) || idx != k)
            throw DataError("malformed scaler file: " + path.string());
    }
    return s;
}

}  // namespace choicepred
