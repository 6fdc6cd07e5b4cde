#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "choicepred/pipeline.hpp"
#include "choicepred/problem.hpp"

namespace choicepred {

// Mean squared deviation scaled by 100. Throws std::invalid_argument on
// empty input or length mismatch.
double msd(std::span<const double> obs, std::span<const double> pred);

struct EvalReport {
    std::vector<std::array<double, 5>> predicted;  // per problem
    std::vector<std::array<double, 5>> sq_dev;     // per problem per block
    std::array<double, 5> block_msd{};
    double overall_msd = 0.0;  // mean of the five block MSDs
};

EvalReport evaluate(const ModelBundle& bundle, std::span<const LabeledProblem> problems);

// One directional choice-pattern check: one or two problems plus assertions
// over the predicted block B-rates. A term is either problem k's predicted
// rate at one block or a constant.
struct AnomalyCheck {
    struct Term {
        int problem = 0;  // 0-based index into problems; -1 for a constant
        int block = 1;
        double constant = 0.0;
    };
    struct Assertion {
        Term lhs;
        Term rhs;
        char op = '>';  // '>' or '<'
        double margin = 0.0;
    };
    std::string name;
    std::vector<Problem> problems;  // one or two
    std::vector<Assertion> assertions;
};

// Check-file grammar, one block per check:
//   check <name>
//   problem <Ha>,<pHa>,<La>,<Hb>,<pHb>,<Lb>,<LotNum>,<LotShape>,<Corr>,<Amb>
//   assert P<k>.B<i> <op> (P<k>.B<i> | <number>) [margin <m>]
//   end
// Lines starting with '#' and blank lines are ignored.
std::vector<AnomalyCheck> parse_anomaly_checks(const std::filesystem::path& path);
std::vector<AnomalyCheck> parse_anomaly_checks(std::istream& in, const std::string& source);

struct AnomalyOutcome {
    std::string name;
    bool passed = false;
    std::vector<std::string> details;  // one line per assertion, with values
};

std::vector<AnomalyOutcome> run_anomaly_suite(const ModelBundle& bundle,
                                              std::span<const AnomalyCheck> checks);

}  // namespace choicepred
