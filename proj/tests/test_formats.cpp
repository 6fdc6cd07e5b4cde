#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "approx.hpp"

#include <filesystem>
#include <fstream>

#include "choicepred/config.hpp"
#include "choicepred/csv.hpp"
#include "choicepred/errors.hpp"
#include "synthetic.hpp"

using namespace choicepred;
using choicepred::testing::AbsApprox;
using choicepred::testing::synthetic_estimation;

namespace {

namespace fs = std::filesystem;

fs::path write_file(const char* name, const std::string& content) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

constexpr const char* kHeader = "Ha,pHa,La,Hb,pHb,Lb,LotNum,LotShape,Corr,Amb";

}  // namespace

TEST_CASE("problem CSV round trip preserves fields") {
    const auto problems = synthetic_estimation(25, 61);
    const fs::path path = fs::temp_directory_path() / "choicepred_roundtrip.csv";
    write_problem_csv(path, problems, true);
    const auto loaded = read_problem_csv(path);
    REQUIRE(loaded.size() == problems.size());
    for (std::size_t j = 0; j < loaded.size(); ++j) {
        CHECK(loaded[j].problem.ha == problems[j].problem.ha);
        CHECK(loaded[j].problem.pha == problems[j].problem.pha);
        CHECK(loaded[j].problem.lot_num == problems[j].problem.lot_num);
        CHECK(loaded[j].problem.lot_shape == problems[j].problem.lot_shape);
        CHECK(loaded[j].problem.corr == problems[j].problem.corr);
        CHECK(loaded[j].problem.amb == problems[j].problem.amb);
        CHECK(loaded[j].labeled);
        for (int i = 0; i < 5; ++i)
            CHECK(loaded[j].b_rates[static_cast<std::size_t>(i)] ==
                  AbsApprox(problems[j].b_rates[static_cast<std::size_t>(i)], 5e-7));  // 6-decimal fixed format
    }
    fs::remove(path);
}

TEST_CASE("unlabeled CSV loads with labeled flag off") {
    const auto path =
        write_file("choicepred_unlabeled.csv",
                   std::string(kHeader) + "\n0,0.5,0,10,0.5,-10,1,-,0,0\n");
    const auto rows = read_problem_csv(path);
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].labeled);
    fs::remove(path);
}

TEST_CASE("CSV header errors name the missing column") {
    const auto missing_b3 = write_file(
        "choicepred_missing_b3.csv",
        std::string(kHeader) + ",B1,B2,B4,B5\n0,0.5,0,10,0.5,-10,1,-,0,0,0.1,0.2,0.3,0.4\n");
    CHECK_THROWS_WITH_AS(read_problem_csv(missing_b3), doctest::Contains("'B3'"), DataError);
    fs::remove(missing_b3);

    const auto wrong_order = write_file("choicepred_wrong_order.csv",
                                        "pHa,Ha,La,Hb,pHb,Lb,LotNum,LotShape,Corr,Amb\n");
    CHECK_THROWS_WITH_AS(read_problem_csv(wrong_order), doctest::Contains("'Ha'"), DataError);
    fs::remove(wrong_order);
}

TEST_CASE("CSV row errors carry the line number") {
    const auto bad_shape = write_file("choicepred_bad_shape.csv",
                                      std::string(kHeader) +
                                          "\n0,0.5,0,10,0.5,-10,1,-,0,0\n"
                                          "0,0.5,0,10,0.5,-10,3,Weird,0,0\n");
    CHECK_THROWS_WITH_AS(read_problem_csv(bad_shape), doctest::Contains(":3"), DataError);
    fs::remove(bad_shape);

    const auto bad_number = write_file("choicepred_bad_number.csv",
                                       std::string(kHeader) + "\n0,0.5,zero,10,0.5,-10,1,-,0,0\n");
    CHECK_THROWS_WITH_AS(read_problem_csv(bad_number), doctest::Contains("'La'"), DataError);
    fs::remove(bad_number);

    const auto bad_rate = write_file(
        "choicepred_bad_rate.csv",
        std::string(kHeader) + ",B1,B2,B3,B4,B5\n0,0.5,0,10,0.5,-10,1,-,0,0,0.1,0.2,0.3,0.4,1.5\n");
    CHECK_THROWS_WITH_AS(read_problem_csv(bad_rate), doctest::Contains("B5"), DataError);
    fs::remove(bad_rate);

    const auto invalid_problem = write_file(
        "choicepred_invalid.csv", std::string(kHeader) + "\n0,0.5,5,10,0.5,-10,1,-,0,0\n");
    // Ha < La
    CHECK_THROWS_WITH_AS(read_problem_csv(invalid_problem), doctest::Contains(":2"), DataError);
    fs::remove(invalid_problem);
}

TEST_CASE("reading never mutates the input file") {
    const std::string content = std::string(kHeader) + "\n0,0.5,0,10,0.5,-10,1,-,0,0\n";
    const auto path = write_file("choicepred_immutable.csv", content);
    read_problem_csv(path);
    CHECK(slurp(path) == content);
    fs::remove(path);
}

TEST_CASE("prediction CSV uses fixed six-decimal fields and appends deviations for labels") {
    const auto problems = synthetic_estimation(2, 31);
    std::vector<BlockPrediction> preds(2);
    preds[0].b_rates = {0.1, 0.2, 0.3, 0.4, 0.5};
    preds[1].b_rates = {1.0 / 3.0, 0.25, 0.125, 0.8, 0.9};
    const fs::path path = fs::temp_directory_path() / "choicepred_predictions.csv";
    write_predictions_csv(path, problems, preds);
    const std::string text = slurp(path);
    CHECK(text.find("SqDev1") != std::string::npos);
    CHECK(text.find("0.333333") != std::string::npos);

    std::vector<LabeledProblem> unlabeled = problems;
    for (auto& lp : unlabeled) lp.labeled = false;
    write_predictions_csv(path, unlabeled, preds);
    CHECK(slurp(path).find("SqDev") == std::string::npos);
    fs::remove(path);
}

TEST_CASE("config files load with overrides and validation") {
    const auto path = write_file("choicepred_config.json", R"({
        "seed": 42,
        "folds": 5,
        "scaler_samples": 2000,
        "kernel": {"degree": 3, "scale": 0.05, "offset": 1.0},
        "svr": {"C": 2.0, "epsilon": 0.03},
        "cpt": {"alpha": 0.8},
        "adjust": {"near_half_band": 0.05},
        "c_grid": [0.5, 2.0],
        "eps_grid": [0.01],
        "data": "est.csv"
    })");
    const RunConfig cfg = load_run_config(path);
    CHECK(cfg.seed == 42);
    CHECK(cfg.folds == 5);
    CHECK(cfg.scaler_samples == 2000);
    CHECK(cfg.kernel.scale == doctest::Approx(0.05));
    CHECK(cfg.svr.c == doctest::Approx(2.0));
    CHECK(cfg.svr.tol == doctest::Approx(1e-3));  // default kept
    CHECK(cfg.features.cpt.alpha == doctest::Approx(0.8));
    CHECK(cfg.features.cpt.beta == doctest::Approx(0.9));  // default kept
    CHECK(cfg.adjust.near_half_band == doctest::Approx(0.05));
    CHECK(cfg.c_grid == std::vector<double>{0.5, 2.0});
    CHECK(cfg.data == "est.csv");
    CHECK_NOTHROW(validate(cfg));
    fs::remove(path);

    RunConfig bad = cfg;
    bad.folds = 1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.scaler_samples = 500;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.features.cpt.alpha = -1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.c_grid.clear();
    CHECK_THROWS_AS(validate(bad), ConfigError);

    const auto malformed = write_file("choicepred_config_bad.json", "{not json");
    CHECK_THROWS_AS(load_run_config(malformed), ConfigError);
    fs::remove(malformed);
    CHECK_THROWS_AS(load_run_config("no_such_config.json"), ConfigError);
}
