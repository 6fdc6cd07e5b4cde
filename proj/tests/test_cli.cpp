#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "approx.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "choicepred/cli.hpp"
#include "choicepred/csv.hpp"
#include "synthetic.hpp"

using namespace choicepred;
using choicepred::testing::AbsApprox;
using choicepred::testing::synthetic_estimation;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct Workspace {
    fs::path root;
    fs::path estimation;
    fs::path bundle;

    Workspace() {
        root = fs::temp_directory_path() / "choicepred_cli_test";
        fs::remove_all(root);
        fs::create_directories(root);
        estimation = root / "estimation.csv";
        bundle = root / "bundle";
        write_problem_csv(estimation, synthetic_estimation(20, 314), true);
    }
};

const Workspace& workspace() {
    static const Workspace w = [] {
        Workspace ws;
        REQUIRE(run_cli({"fit-scaler", "--data", ws.estimation.string(), "--bundle",
                         ws.bundle.string(), "--samples", "1000", "--seed", "9"}) == 0);
        REQUIRE(run_cli({"train", "--data", ws.estimation.string(), "--bundle",
                         ws.bundle.string(), "--folds", "4", "--seed", "9", "--samples",
                         "1000"}) == 0);
        return ws;
    }();
    return w;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"no-such-command"}) == 1);
    CHECK(run_cli({"train"}) == 1);  // no --data
    CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("config guards exit with code 1") {
    const Workspace& ws = workspace();
    CHECK(run_cli({"fit-scaler", "--data", ws.estimation.string(), "--bundle",
                   (ws.root / "x").string(), "--samples", "500"}) == 1);
    CHECK(run_cli({"train", "--data", ws.estimation.string(), "--bundle",
                   (ws.root / "x").string(), "--folds", "1"}) == 1);
}

TEST_CASE("data errors exit with code 2") {
    const Workspace& ws = workspace();
    CHECK(run_cli({"train", "--data", (ws.root / "missing.csv").string(), "--bundle",
                   (ws.root / "x").string()}) == 2);

    const fs::path unlabeled = ws.root / "unlabeled.csv";
    {
        std::ofstream out(unlabeled);
        out << "Ha,pHa,La,Hb,pHb,Lb,LotNum,LotShape,Corr,Amb\n0,0.5,0,1,0.5,0,1,-,0,0\n";
    }
    CHECK(run_cli({"train", "--data", unlabeled.string(), "--bundle",
                   (ws.root / "x").string()}) == 2);
    CHECK(run_cli({"evaluate", "--data", unlabeled.string(), "--bundle",
                   ws.bundle.string()}) == 2);
}

TEST_CASE("fit-scaler writes the per-block scaler files") {
    const Workspace& ws = workspace();
    for (int block = 1; block <= 5; ++block)
        CHECK(fs::exists(ws.bundle / ("scaler_block" + std::to_string(block) + ".txt")));
    CHECK(fs::exists(ws.bundle / "scaler_brate.txt"));

    // Re-fitting with the same seed reproduces the files byte for byte.
    const fs::path second = ws.root / "bundle_refit";
    REQUIRE(run_cli({"fit-scaler", "--data", ws.estimation.string(), "--bundle", second.string(),
                     "--samples", "1000", "--seed", "9"}) == 0);
    for (int block = 1; block <= 5; ++block) {
        const std::string name = "scaler_block" + std::to_string(block) + ".txt";
        CHECK(slurp(ws.bundle / name) == slurp(second / name));
    }
}

TEST_CASE("train writes a complete bundle and CV report") {
    const Workspace& ws = workspace();
    for (int block = 1; block <= 5; ++block)
        CHECK(fs::exists(ws.bundle / ("block" + std::to_string(block) + ".svr")));
    CHECK(fs::exists(ws.bundle / "manifest.json"));
    const std::string report = slurp(ws.bundle / "cv_report.csv");
    CHECK(report.find("C,epsilon,fold,msd") != std::string::npos);
    CHECK(report.find("mean") != std::string::npos);
}

TEST_CASE("predict writes one row per problem and is deterministic") {
    const Workspace& ws = workspace();
    const fs::path problems = ws.root / "problems.csv";
    REQUIRE(run_cli({"sample", "--count", "30", "--seed", "77", "--out",
                     problems.string()}) == 0);

    const fs::path out1 = ws.root / "pred1.csv";
    const fs::path out2 = ws.root / "pred2.csv";
    REQUIRE(run_cli({"predict", "--data", problems.string(), "--bundle", ws.bundle.string(),
                     "--out", out1.string()}) == 0);
    REQUIRE(run_cli({"predict", "--data", problems.string(), "--bundle", ws.bundle.string(),
                     "--out", out2.string()}) == 0);
    CHECK(slurp(out1) == slurp(out2));

    const auto rows = read_problem_csv(problems);
    std::ifstream in(out1);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    CHECK(lines == rows.size() + 1);  // header + one row each
}

TEST_CASE("sampling is deterministic given the seed") {
    const Workspace& ws = workspace();
    const fs::path a = ws.root / "sample_a.csv";
    const fs::path b = ws.root / "sample_b.csv";
    REQUIRE(run_cli({"sample", "--count", "50", "--seed", "5", "--out", a.string()}) == 0);
    REQUIRE(run_cli({"sample", "--count", "50", "--seed", "5", "--out", b.string()}) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("prediction SqDev columns agree with the evaluate report") {
    const Workspace& ws = workspace();
    const fs::path pred = ws.root / "labeled_pred.csv";
    REQUIRE(run_cli({"predict", "--data", ws.estimation.string(), "--bundle",
                     ws.bundle.string(), "--out", pred.string()}) == 0);
    const fs::path report = ws.root / "labeled_report.csv";
    REQUIRE(run_cli({"evaluate", "--data", ws.estimation.string(), "--bundle",
                     ws.bundle.string(), "--out", report.string()}) == 0);

    // Per-problem squared deviations printed by predict must match the
    // long-format evaluate report row by row.
    std::vector<std::array<double, 5>> from_eval;
    {
        std::ifstream in(report);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            const auto last = line.rfind(',');
            const auto block = line.find(',');
            const int b = std::stoi(line.substr(block + 1));
            if (b == 1) from_eval.push_back({});
            from_eval.back()[static_cast<std::size_t>(b - 1)] =
                std::stod(line.substr(last + 1));
        }
    }
    std::ifstream in(pred);
    std::string line;
    std::getline(in, line);
    REQUIRE(line.find("SqDev1") != std::string::npos);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::vector<double> fields;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) {
            try {
                fields.push_back(std::stod(tok));
            } catch (const std::invalid_argument&) {
                fields.push_back(0.0);  // LotShape token
            }
        }
        REQUIRE(fields.size() == 20);
        for (int i = 0; i < 5; ++i)
            CHECK(fields[static_cast<std::size_t>(15 + i)] ==
                  AbsApprox(from_eval[row][static_cast<std::size_t>(i)], 5e-7));
        ++row;
    }
    CHECK(row == from_eval.size());
}

TEST_CASE("non-convergence exits with code 3") {
    const Workspace& ws = workspace();
    const fs::path config = ws.root / "one_pass.json";
    {
        std::ofstream out(config);
        out << R"({"svr": {"max_passes": 1}, "c_grid": [1.0], "eps_grid": [0.05]})";
    }
    CHECK(run_cli({"train", "--config", config.string(), "--data", ws.estimation.string(),
                   "--bundle", (ws.root / "bundle_onepass").string(), "--folds", "4",
                   "--samples", "1000", "--seed", "9"}) == 3);
}

TEST_CASE("evaluate scores zero on a self-labeled fixture and runs the checks file") {
    const Workspace& ws = workspace();

    // Build a labeled CSV whose labels are the model's own predictions.
    const fs::path problems = ws.root / "self.csv";
    REQUIRE(run_cli({"sample", "--count", "8", "--seed", "21", "--out",
                     problems.string()}) == 0);
    const fs::path pred = ws.root / "self_pred.csv";
    REQUIRE(run_cli({"predict", "--data", problems.string(), "--bundle", ws.bundle.string(),
                     "--out", pred.string()}) == 0);

    // The prediction CSV is itself a labeled problem CSV (B1..B5 columns).
    const fs::path report = ws.root / "self_report.csv";
    REQUIRE(run_cli({"evaluate", "--data", pred.string(), "--bundle", ws.bundle.string(),
                     "--out", report.string(), "--checks",
                     (fs::path(CHOICEPRED_DATA_DIR) / "anomaly_checks.txt").string()}) == 0);

    const auto rows = read_problem_csv(pred);
    const std::string text = slurp(report);
    CHECK(text.find("problem,block,observed,predicted,sq_dev") != std::string::npos);
    // Labels came from the 6-decimal echo of the predictions, so every
    // squared deviation rounds to zero at the report precision.
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        CHECK(line.substr(line.rfind(',') + 1) == "0.000000");
        ++count;
    }
    CHECK(count == rows.size() * 5);
}
