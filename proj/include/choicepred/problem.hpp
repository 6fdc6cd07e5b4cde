#pragma once

#include <cstddef>
#include <vector>

#include "choicepred/rng.hpp"

namespace choicepred {

enum class LotShape { None, Symm, RSkew, LSkew };

enum class Dominance { ADominates, BDominates, Neither };

// A two-option choice task. Option A pays ha with probability pha, la
// otherwise. Option B pays, with probability phb, a draw from a lottery with
// mean hb (lot_num outcomes shaped by lot_shape), and lb otherwise.
// corr in {-1,0,+1} is the sign of the correlation between the options'
// payoffs; amb=1 means option B's probabilities are initially hidden from
// the decision maker.
struct Problem {
    double ha = 0.0;
    double pha = 0.0;
    double la = 0.0;
    double hb = 0.0;
    double phb = 0.0;
    double lb = 0.0;
    int lot_num = 1;
    LotShape lot_shape = LotShape::None;
    int corr = 0;
    int amb = 0;
};

// Throws std::invalid_argument when a field is out of range or the
// lot_num/lot_shape combination is inconsistent.
void validate(const Problem& p);

struct OutcomeEntry {
    double outcome = 0.0;
    double prob = 0.0;
};

// Discrete payoff distribution: entries sorted ascending by outcome,
// strictly positive probabilities summing to 1, near-duplicate outcomes
// merged.
class OutcomeDistribution {
public:
    static OutcomeDistribution from_entries(std::vector<OutcomeEntry> entries);

    const std::vector<OutcomeEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    double min_outcome() const { return entries_.front().outcome; }
    double max_outcome() const { return entries_.back().outcome; }

    double mean() const;
    double variance() const;
    // Shannon entropy of the probability vector, natural log, 0*log(0) = 0.
    double entropy() const;
    // Mean of the distinct outcomes, each weighted 1/size().
    double uniform_mean() const;

    double prob_at_most(double t) const;
    double prob_below(double t) const;

    // Inverse-CDF draw for u in [0, 1).
    double sample(double u) const;

private:
    explicit OutcomeDistribution(std::vector<OutcomeEntry> entries)
        : entries_(std::move(entries)) {}

    std::vector<OutcomeEntry> entries_;
};

OutcomeDistribution dist_a(const Problem& p);
OutcomeDistribution dist_b(const Problem& p);

// Expands the option-B lottery around its mean hb. Symm uses binomial
// weights on integer offsets; RSkew puts geometrically decaying weights on
// an increasing support; LSkew is the RSkew reflection about hb. The result
// always has mean exactly hb. Throws std::invalid_argument for lot_num < 1
// or lot_num > 1 with LotShape::None.
OutcomeDistribution build_lottery(double hb, int lot_num, LotShape shape);

// First-order stochastic dominance between two distributions.
Dominance dominates(const OutcomeDistribution& a, const OutcomeDistribution& b);

// Draws a random problem from the documented generator ranges: integer
// outcomes in [-50, 100] with ha >= la, probabilities on a fixed grid,
// lot_num in {1..9}, lot_shape uniform over legal values, amb with rate 0.2,
// corr uniform over {-1,0,+1}.
Problem sample_problem(Rng& rng);

}  // namespace choicepred
