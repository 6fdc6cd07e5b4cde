#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "choicepred/evaluation.hpp"
#include "choicepred/pipeline.hpp"
#include "choicepred/problem.hpp"

namespace choicepred {

// Problem CSV: header Ha,pHa,La,Hb,pHb,Lb,LotNum,LotShape,Corr,Amb with
// LotShape in {-, Symm, R-skew, L-skew}, optionally followed by all of
// B1..B5. Errors carry the file name and 1-based line number.
std::vector<LabeledProblem> read_problem_csv(const std::filesystem::path& path);

// Parses the 10 problem fields from one comma-separated row (no B-rates).
// `where` seeds error messages, e.g. "checks.txt:12".
Problem parse_problem_row(const std::string& row, const std::string& where);

const std::string& lot_shape_token(LotShape shape);

void write_problem_csv(const std::filesystem::path& path,
                       std::span<const LabeledProblem> problems, bool include_labels);

// One row per problem: inputs echoed, then B1..B5. When every input problem
// is labeled, appends SqDev1..SqDev5.
void write_predictions_csv(const std::filesystem::path& path,
                           std::span<const LabeledProblem> problems,
                           std::span<const BlockPrediction> predictions);

// Long-format report: problem id, block, observed, predicted, squared
// deviation.
void write_eval_csv(const std::filesystem::path& path,
                    std::span<const LabeledProblem> problems, const EvalReport& report);

}  // namespace choicepred
