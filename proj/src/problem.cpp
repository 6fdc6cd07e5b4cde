#include "choicepred/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace choicepred {

namespace {

constexpr double kProbSumTol = 1e-9;
constexpr double kMergeTol = 1e-9;

// Probability grid used by the problem generator.
const std::vector<double>& probability_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        g.push_back(0.01);
        for (int k = 1; k <= 19; ++k) g.push_back(k / 20.0);
        g.push_back(0.99);
        g.push_back(1.0);
        return g;
    }();
    return grid;
}

}  // namespace

void validate(const Problem& p) {
    if (!(p.pha >= 0.0 && p.pha <= 1.0))
        throw std::invalid_argument("pHa must lie in [0,1], got " + std::to_string(p.pha));
    if (!(p.phb >= 0.0 && p.phb <= 1.0))
        throw std::invalid_argument("pHb must lie in [0,1], got " + std::to_string(p.phb));
    if (!(p.ha >= p.la))
        throw std::invalid_argument("Ha must be >= La");
    if (p.lot_num < 1)
        throw std::invalid_argument("LotNum must be a positive integer");
    if ((p.lot_shape == LotShape::None) != (p.lot_num == 1))
        throw std::invalid_argument("LotShape must be '-' exactly when LotNum is 1");
    if (p.amb != 0 && p.amb != 1)
        throw std::invalid_argument("Amb must be 0 or 1");
    if (p.corr != -1 && p.corr != 0 && p.corr != 1)
        throw std::invalid_argument("Corr must be -1, 0 or +1");
    if (!std::isfinite(p.la) || !std::isfinite(p.ha) || !std::isfinite(p.lb) || !std::isfinite(p.hb))
        throw std::invalid_argument("outcomes must be finite");
}

OutcomeDistribution OutcomeDistribution::from_entries(std::vector<OutcomeEntry> entries) {
    std::erase_if(entries, [](const OutcomeEntry& e) { return e.prob == 0.0; });
    if (entries.empty())
        throw std::invalid_argument("distribution needs at least one positive-probability entry");
    for (const auto& e : entries) {
        if (!(e.prob > 0.0) || !std::isfinite(e.outcome))
            throw std::invalid_argument("distribution entries must have finite outcome and positive probability");
    }
    std::sort(entries.begin(), entries.end(),
              [](const OutcomeEntry& a, const OutcomeEntry& b) { return a.outcome < b.outcome; });

    std::vector<OutcomeEntry> merged;
    merged.reserve(entries.size());
    for (const auto& e : entries) {
        if (!merged.empty() && e.outcome - merged.back().outcome < kMergeTol)
            merged.back().prob += e.prob;
        else
            merged.push_back(e);
    }

    double total = 0.0;
    for (const auto& e : merged) total += e.prob;
    if (std::abs(total - 1.0) > kProbSumTol)
        throw std::invalid_argument("probabilities must sum to 1, got " + std::to_string(total));
    return OutcomeDistribution(std::move(merged));
}

double OutcomeDistribution::mean() const {
    double m = 0.0;
    for (const auto& e : entries_) m += e.outcome * e.prob;
    return m;
}

double OutcomeDistribution::variance() const {
    const double m = mean();
    double v = 0.0;
    for (const auto& e : entries_) v += e.prob * (e.outcome - m) * (e.outcome - m);
    return v;
}

double OutcomeDistribution::entropy() const {
    double h = 0.0;
    for (const auto& e : entries_) h -= e.prob * std::log(e.prob);
    return h;
}

double OutcomeDistribution::uniform_mean() const {
    double m = 0.0;
    for (const auto& e : entries_) m += e.outcome;
    return m / static_cast<double>(entries_.size());
}

double OutcomeDistribution::prob_at_most(double t) const {
    double c = 0.0;
    for (const auto& e : entries_) {
        if (e.outcome <= t) c += e.prob;
    }
    return c;
}

double OutcomeDistribution::prob_below(double t) const {
    double c = 0.0;
    for (const auto& e : entries_) {
        if (e.outcome < t) c += e.prob;
    }
    return c;
}

double OutcomeDistribution::sample(double u) const {
    double c = 0.0;
    for (const auto& e : entries_) {
        c += e.prob;
        if (u < c) return e.outcome;
    }
    return entries_.back().outcome;
}

OutcomeDistribution dist_a(const Problem& p) {
    return OutcomeDistribution::from_entries({{p.la, 1.0 - p.pha}, {p.ha, p.pha}});
}

OutcomeDistribution dist_b(const Problem& p) {
    const OutcomeDistribution lottery = build_lottery(p.hb, p.lot_num, p.lot_shape);
    std::vector<OutcomeEntry> entries;
    entries.reserve(lottery.size() + 1);
    for (const auto& e : lottery.entries()) entries.push_back({e.outcome, p.phb * e.prob});
    entries.push_back({p.lb, 1.0 - p.phb});
    return OutcomeDistribution::from_entries(std::move(entries));
}

OutcomeDistribution build_lottery(double hb, int lot_num, LotShape shape) {
    if (lot_num < 1) throw std::invalid_argument("LotNum must be >= 1");
    if (lot_num == 1) return OutcomeDistribution::from_entries({{hb, 1.0}});
    if (shape == LotShape::None)
        throw std::invalid_argument("LotNum > 1 requires a lottery shape");

    std::vector<OutcomeEntry> entries;
    entries.reserve(static_cast<std::size_t>(lot_num));

    if (shape == LotShape::Symm) {
        // Binomial(n-1, 1/2) weights on offsets j - (n-1)/2; mean is exactly hb.
        const int n = lot_num - 1;
        double binom = 1.0;  // C(n, 0)
        const double scale = std::ldexp(1.0, -n);
        for (int j = 0; j <= n; ++j) {
            entries.push_back({hb + (j - 0.5 * n), binom * scale});
            binom = binom * (n - j) / (j + 1);
        }
    } else {
        // Weights proportional to 2^-j on support j = 1..n, centered so the
        // mean lands on hb. RSkew puts the long tail above the mean, LSkew is
        // its mirror image.
        const double sign = (shape == LotShape::RSkew) ? 1.0 : -1.0;
        double total = 0.0, first_moment = 0.0;
        std::vector<double> weights(static_cast<std::size_t>(lot_num));
        for (int j = 1; j <= lot_num; ++j) {
            const double w = std::ldexp(1.0, -j);
            weights[static_cast<std::size_t>(j - 1)] = w;
            total += w;
            first_moment += j * w;
        }
        const double mean_j = first_moment / total;
        for (int j = 1; j <= lot_num; ++j) {
            entries.push_back({hb + sign * (j - mean_j), weights[static_cast<std::size_t>(j - 1)] / total});
        }
    }
    return OutcomeDistribution::from_entries(std::move(entries));
}

Dominance dominates(const OutcomeDistribution& a, const OutcomeDistribution& b) {
    constexpr double eps = 1e-12;

    std::vector<double> support;
    support.reserve(a.size() + b.size());
    for (const auto& e : a.entries()) support.push_back(e.outcome);
    for (const auto& e : b.entries()) support.push_back(e.outcome);
    std::sort(support.begin(), support.end());

    bool a_leq = true, b_leq = true;       // CDF_a <= CDF_b everywhere, and vice versa
    bool a_strict = false, b_strict = false;
    for (double t : support) {
        const double ca = a.prob_at_most(t);
        const double cb = b.prob_at_most(t);
        if (ca > cb + eps) a_leq = false;
        if (cb > ca + eps) b_leq = false;
        if (ca < cb - eps) a_strict = true;
        if (cb < ca - eps) b_strict = true;
    }
    if (a_leq && a_strict) return Dominance::ADominates;
    if (b_leq && b_strict) return Dominance::BDominates;
    return Dominance::Neither;
}

Problem sample_problem(Rng& rng) {
    const auto& grid = probability_grid();
    const int grid_max = static_cast<int>(grid.size()) - 1;

    Problem p;
    p.la = rng.next_int(-50, 100);
    p.ha = rng.next_int(static_cast<int>(p.la), 100);
    p.pha = grid[static_cast<std::size_t>(rng.next_int(0, grid_max))];
    p.lb = rng.next_int(-50, 100);
    p.hb = rng.next_int(-50, 100);
    p.phb = grid[static_cast<std::size_t>(rng.next_int(0, grid_max))];
    p.lot_num = rng.next_int(1, 9);
    if (p.lot_num == 1) {
        p.lot_shape = LotShape::None;
    } else {
        static const LotShape shapes[] = {LotShape::Symm, LotShape::RSkew, LotShape::LSkew};
        p.lot_shape = shapes[rng.next_int(0, 2)];
    }
    p.corr = rng.next_int(-1, 1);
    p.amb = rng.next_unit() < 0.2 ? 1 : 0;
    return p;
}

}  // namespace choicepred
