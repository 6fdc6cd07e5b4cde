#include "choicepred/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "choicepred/csv.hpp"
#include "choicepred/errors.hpp"

namespace choicepred {

double msd(std::span<const double> obs, std::span<const double> pred) {
    if (obs.empty()) throw std::invalid_argument("msd: empty input");
    if (obs.size() != pred.size())
        throw std::invalid_argument("msd: length mismatch: " + std::to_string(obs.size()) +
                                    " vs " + std::to_string(pred.size()));
    double sum = 0.0;
    for (std::size_t j = 0; j < obs.size(); ++j) {
        const double d = obs[j] - pred[j];
        sum += d * d;
    }
    return 100.0 * sum / static_cast<double>(obs.size());
}

EvalReport evaluate(const ModelBundle& bundle, std::span<const LabeledProblem> problems) {
    if (problems.empty()) throw std::invalid_argument("evaluate: no problems");
    for (std::size_t j = 0; j < problems.size(); ++j) {
        if (!problems[j].labeled)
            throw DataError("problem " + std::to_string(j + 1) +
                            " is missing observed B-rates B1..B5");
    }

    EvalReport report;
    report.predicted.reserve(problems.size());
    report.sq_dev.reserve(problems.size());
    for (const LabeledProblem& lp : problems) {
        const BlockPrediction bp = predict_problem(bundle, lp.problem);
        report.predicted.push_back(bp.b_rates);
        std::array<double, 5> sq{};
        for (std::size_t i = 0; i < 5; ++i) {
            const double d = lp.b_rates[i] - bp.b_rates[i];
            sq[i] = d * d;
        }
        report.sq_dev.push_back(sq);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        double sum = 0.0;
        for (const auto& sq : report.sq_dev) sum += sq[i];
        report.block_msd[i] = 100.0 * sum / static_cast<double>(problems.size());
        total += report.block_msd[i];
    }
    report.overall_msd = total / 5.0;
    return report;
}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// P<k>.B<i> or a numeric constant.
AnomalyCheck::Term parse_term(const std::string& token, std::size_t problem_count,
                              const std::string& where) {
    AnomalyCheck::Term term;
    if (token.size() >= 4 && token[0] == 'P') {
        const auto dot = token.find(".B");
        if (dot == std::string::npos)
            throw DataError(where + ": malformed term '" + token + "'");
        const std::string p_part = token.substr(1, dot - 1);
        const std::string b_part = token.substr(dot + 2);
        try {
            term.problem = std::stoi(p_part) - 1;
            term.block = std::stoi(b_part);
        } catch (const std::exception&) {
            throw DataError(where + ": malformed term '" + token + "'");
        }
        if (term.problem < 0 || static_cast<std::size_t>(term.problem) >= problem_count)
            throw DataError(where + ": term '" + token + "' references undefined problem");
        if (term.block < 1 || term.block > 5)
            throw DataError(where + ": term '" + token + "' references block outside 1..5");
        return term;
    }
    char* end = nullptr;
    term.constant = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0')
        throw DataError(where + ": malformed term '" + token + "'");
    term.problem = -1;
    return term;
}

}  // namespace

std::vector<AnomalyCheck> parse_anomaly_checks(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw DataError("cannot read checks file: " + path.string());
    return parse_anomaly_checks(file, path.filename().string());
}

std::vector<AnomalyCheck> parse_anomaly_checks(std::istream& in, const std::string& source) {
    std::vector<AnomalyCheck> checks;
    AnomalyCheck current;
    bool open = false;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const std::string where = source + ":" + std::to_string(line_no);

        std::istringstream words(text);
        std::string keyword;
        words >> keyword;

        if (keyword == "check") {
            if (open) throw DataError(where + ": 'check' before previous check ended");
            std::string name;
            words >> name;
            if (name.empty()) throw DataError(where + ": check needs a name");
            current = AnomalyCheck{};
            current.name = name;
            open = true;
        } else if (keyword == "problem") {
            if (!open) throw DataError(where + ": 'problem' outside a check");
            if (current.problems.size() >= 2)
                throw DataError(where + ": a check may define at most two problems");
            std::string rest;
            std::getline(words, rest);
            current.problems.push_back(parse_problem_row(trim(rest), where));
        } else if (keyword == "assert") {
            if (!open) throw DataError(where + ": 'assert' outside a check");
            if (current.problems.empty())
                throw DataError(where + ": 'assert' before any 'problem'");
            std::string lhs_tok, op_tok, rhs_tok;
            words >> lhs_tok >> op_tok >> rhs_tok;
            if (rhs_tok.empty()) throw DataError(where + ": assert needs '<lhs> <op> <rhs>'");
            if (op_tok != "<" && op_tok != ">")
                throw DataError(where + ": comparator must be < or >, got '" + op_tok + "'");
            AnomalyCheck::Assertion assertion;
            assertion.lhs = parse_term(lhs_tok, current.problems.size(), where);
            assertion.rhs = parse_term(rhs_tok, current.problems.size(), where);
            assertion.op = op_tok[0];
            std::string margin_word;
            if (words >> margin_word) {
                if (margin_word != "margin")
                    throw DataError(where + ": unexpected token '" + margin_word + "'");
                if (!(words >> assertion.margin) || assertion.margin < 0.0)
                    throw DataError(where + ": margin must be a non-negative number");
            }
            current.assertions.push_back(assertion);
        } else if (keyword == "end") {
            if (!open) throw DataError(where + ": 'end' outside a check");
            if (current.assertions.empty())
                throw DataError(where + ": check '" + current.name + "' has no assertions");
            checks.push_back(std::move(current));
            open = false;
        } else {
            throw DataError(where + ": unknown keyword '" + keyword + "'");
        }
    }
    if (open) throw DataError(source + ": unterminated check '" + current.name + "'");
    return checks;
}

std::vector<AnomalyOutcome> run_anomaly_suite(const ModelBundle& bundle,
                                              std::span<const AnomalyCheck> checks) {
    std::vector<AnomalyOutcome> outcomes;
    outcomes.reserve(checks.size());
    char buf[160];
    for (const AnomalyCheck& check : checks) {
        std::vector<BlockPrediction> predictions;
        predictions.reserve(check.problems.size());
        for (const Problem& p : check.problems) predictions.push_back(predict_problem(bundle, p));

        AnomalyOutcome outcome;
        outcome.name = check.name;
        outcome.passed = true;
        for (const auto& assertion : check.assertions) {
            auto value = [&](const AnomalyCheck::Term& t) {
                if (t.problem < 0) return t.constant;
                return predictions[static_cast<std::size_t>(t.problem)]
                    .b_rates[static_cast<std::size_t>(t.block - 1)];
            };
            auto describe = [&](const AnomalyCheck::Term& t) {
                if (t.problem < 0) {
                    std::snprintf(buf, sizeof(buf), "%.6f", t.constant);
                    return std::string(buf);
                }
                return "P" + std::to_string(t.problem + 1) + ".B" + std::to_string(t.block);
            };
            const double lhs = value(assertion.lhs);
            const double rhs = value(assertion.rhs);
            const bool ok = assertion.op == '>' ? lhs > rhs + assertion.margin
                                                : lhs < rhs - assertion.margin;
            outcome.passed = outcome.passed && ok;
            std::snprintf(buf, sizeof(buf), "%s %s=%.6f %c %s=%.6f margin %.6f", ok ? "ok" : "FAIL",
                          describe(assertion.lhs).c_str(), lhs, assertion.op,
                          describe(assertion.rhs).c_str(), rhs, assertion.margin);
            outcome.details.push_back(buf);
        }
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

}  // namespace choicepred
