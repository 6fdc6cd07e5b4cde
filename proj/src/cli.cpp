#include "choicepred/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "choicepred/config.hpp"
#include "choicepred/csv.hpp"
#include "choicepred/errors.hpp"
#include "choicepred/evaluation.hpp"
#include "choicepred/io.hpp"
#include "choicepred/pipeline.hpp"

namespace choicepred {

namespace {

namespace fs = std::filesystem;

struct CliOptions {
    std::string config;
    std::string data;
    std::string bundle;
    std::string out;
    std::string checks;
    std::optional<std::uint64_t> seed;
    std::optional<int> folds;
    std::optional<int> samples;
    int sample_count = 100;  // `sample` subcommand only
};

RunConfig resolve_config(const CliOptions& opt) {
    RunConfig cfg;
    if (!opt.config.empty()) cfg = load_run_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.folds) cfg.folds = *opt.folds;
    if (opt.samples) cfg.scaler_samples = *opt.samples;
    if (!opt.data.empty()) cfg.data = opt.data;
    if (!opt.bundle.empty()) cfg.bundle = opt.bundle;
    if (!opt.out.empty()) cfg.out = opt.out;
    if (!opt.checks.empty()) cfg.checks = opt.checks;
    validate(cfg);
    return cfg;
}

std::string require_path(const std::string& value, const char* what) {
    if (value.empty()) throw ConfigError(std::string("missing required path: ") + what);
    return value;
}

std::vector<double> collect_observed_b_rates(std::span<const LabeledProblem> problems) {
    std::vector<double> rates;
    rates.reserve(problems.size() * 5);
    for (const LabeledProblem& lp : problems) {
        if (!lp.labeled) continue;
        rates.insert(rates.end(), lp.b_rates.begin(), lp.b_rates.end());
    }
    return rates;
}

std::vector<LabeledProblem> read_labeled_csv(const std::string& path) {
    auto problems = read_problem_csv(path);
    for (const auto& lp : problems) {
        if (!lp.labeled)
            throw DataError(fs::path(path).filename().string() +
                            ": columns B1..B5 are required for this command");
    }
    return problems;
}

std::vector<Problem> sample_problems(int count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Problem> samples;
    samples.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) samples.push_back(sample_problem(rng));
    return samples;
}

bool scaler_files_present(const fs::path& dir) {
    for (int block = 1; block <= 5; ++block)
        if (!fs::exists(dir / ("scaler_block" + std::to_string(block) + ".txt"))) return false;
    return fs::exists(dir / "scaler_brate.txt");
}

void write_scaler_files(const fs::path& dir, const ScalerSet& scalers) {
    fs::create_directories(dir);
    for (int block = 1; block <= 5; ++block)
        save_scaler(dir / ("scaler_block" + std::to_string(block) + ".txt"),
                    scalers.per_block[static_cast<std::size_t>(block - 1)]);
    Scaler b;
    b.mean = {scalers.b_mean};
    b.stddev = {scalers.b_std};
    save_scaler(dir / "scaler_brate.txt", b);
}

ScalerSet load_scaler_files(const fs::path& dir) {
    ScalerSet scalers;
    for (int block = 1; block <= 5; ++block)
        scalers.per_block[static_cast<std::size_t>(block - 1)] =
            load_scaler(dir / ("scaler_block" + std::to_string(block) + ".txt"));
    const Scaler b = load_scaler(dir / "scaler_brate.txt");
    if (b.mean.size() != 1) throw DataError("malformed B-rate scaler in " + dir.string());
    scalers.b_mean = b.mean[0];
    scalers.b_std = b.stddev[0];
    return scalers;
}

ScalerSet fit_scaler_set(const RunConfig& cfg, std::span<const LabeledProblem> estimation) {
    const auto samples = sample_problems(cfg.scaler_samples, cfg.seed);
    const auto rates = collect_observed_b_rates(estimation);
    if (rates.empty())
        throw DataError("estimation data carries no observed B-rates; cannot fit B-rate scaler");
    return fit_scalers(samples, rates, cfg.features);
}

int cmd_fit_scaler(const CliOptions& opt) {
    const RunConfig cfg = resolve_config(opt);
    const auto estimation = read_labeled_csv(require_path(cfg.data, "--data"));
    const fs::path dir = require_path(cfg.bundle, "--bundle");
    const ScalerSet scalers = fit_scaler_set(cfg, estimation);
    write_scaler_files(dir, scalers);
    std::cout << "wrote scalers for blocks 1..5 to " << dir.string() << "\n";
    return 0;
}

int cmd_train(const CliOptions& opt) {
    const RunConfig cfg = resolve_config(opt);
    const auto estimation = read_labeled_csv(require_path(cfg.data, "--data"));
    const fs::path dir = require_path(cfg.bundle, "--bundle");

    ScalerSet scalers;
    if (scaler_files_present(dir)) {
        scalers = load_scaler_files(dir);
        std::cout << "using existing scalers in " << dir.string() << "\n";
    } else {
        scalers = fit_scaler_set(cfg, estimation);
        write_scaler_files(dir, scalers);
        std::cout << "fitted scalers from " << cfg.scaler_samples << " sampled problems\n";
    }

    // Grid search by CV mean MSD; ties resolved toward smaller C, then
    // smaller epsilon, by scanning the grids in ascending order.
    PipelineConfig pipeline = to_pipeline_config(cfg);
    std::vector<double> c_grid = cfg.c_grid;
    std::vector<double> eps_grid = cfg.eps_grid;
    std::sort(c_grid.begin(), c_grid.end());
    std::sort(eps_grid.begin(), eps_grid.end());

    std::ostringstream cv_rows;
    double best_msd = std::numeric_limits<double>::infinity();
    double best_c = c_grid.front(), best_eps = eps_grid.front();
    char buf[128];
    for (double c : c_grid) {
        for (double eps : eps_grid) {
            pipeline.svr.c = c;
            pipeline.svr.epsilon = eps;
            const CvReport report = cross_validate(estimation, scalers, pipeline);
            for (std::size_t f = 0; f < report.fold_msd.size(); ++f) {
                std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%zu,%.6f\n", c, eps, f + 1,
                              report.fold_msd[f]);
                cv_rows << buf;
            }
            std::snprintf(buf, sizeof(buf), "%.6f,%.6f,mean,%.6f\n", c, eps, report.mean_msd);
            cv_rows << buf;
            std::snprintf(buf, sizeof(buf), "CV C=%g epsilon=%g mean MSD %.6f\n", c, eps,
                          report.mean_msd);
            std::cout << buf;
            if (report.mean_msd < best_msd) {
                best_msd = report.mean_msd;
                best_c = c;
                best_eps = eps;
            }
        }
    }

    pipeline.svr.c = best_c;
    pipeline.svr.epsilon = best_eps;
    const ModelBundle bundle = train_bundle(estimation, scalers, pipeline);
    for (int block = 1; block <= 5; ++block) {
        if (!bundle.models[static_cast<std::size_t>(block - 1)].converged)
            throw ConvergenceError("block " + std::to_string(block) +
                                   " model did not converge; raise max_passes or tol");
    }
    save_bundle(dir, bundle);

    write_file_atomic(dir / "cv_report.csv", "C,epsilon,fold,msd\n" + cv_rows.str());

    std::snprintf(buf, sizeof(buf), "selected C=%g epsilon=%g (CV mean MSD %.6f)\n", best_c,
                  best_eps, best_msd);
    std::cout << buf << "bundle written to " << dir.string() << "\n";
    return 0;
}

int cmd_predict(const CliOptions& opt) {
    const RunConfig cfg = resolve_config(opt);
    const auto problems = read_problem_csv(require_path(cfg.data, "--data"));
    const ModelBundle bundle = load_bundle(require_path(cfg.bundle, "--bundle"));

    std::vector<BlockPrediction> predictions;
    predictions.reserve(problems.size());
    for (const LabeledProblem& lp : problems)
        predictions.push_back(predict_problem(bundle, lp.problem));

    const std::string out_path = require_path(cfg.out, "--out");
    write_predictions_csv(out_path, problems, predictions);
    std::cout << "wrote " << predictions.size() << " prediction rows to " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const CliOptions& opt) {
    const RunConfig cfg = resolve_config(opt);
    const auto problems = read_labeled_csv(require_path(cfg.data, "--data"));
    const ModelBundle bundle = load_bundle(require_path(cfg.bundle, "--bundle"));

    const EvalReport report = evaluate(bundle, problems);
    char buf[96];
    for (int i = 0; i < 5; ++i) {
        std::snprintf(buf, sizeof(buf), "block %d MSD: %.6f\n", i + 1,
                      report.block_msd[static_cast<std::size_t>(i)]);
        std::cout << buf;
    }
    std::snprintf(buf, sizeof(buf), "overall MSD: %.6f\n", report.overall_msd);
    std::cout << buf;

    if (!cfg.out.empty()) {
        write_eval_csv(cfg.out, problems, report);
        std::cout << "wrote per-block report to " << cfg.out << "\n";
    }

    if (!cfg.checks.empty()) {
        const auto checks = parse_anomaly_checks(fs::path(cfg.checks));
        const auto outcomes = run_anomaly_suite(bundle, checks);
        std::size_t passed = 0;
        for (const AnomalyOutcome& outcome : outcomes) {
            std::cout << "check " << outcome.name << ": " << (outcome.passed ? "PASS" : "FAIL")
                      << "\n";
            for (const std::string& line : outcome.details) std::cout << "  " << line << "\n";
            if (outcome.passed) ++passed;
        }
        std::cout << "anomaly checks passed: " << passed << "/" << outcomes.size() << "\n";
    }
    return 0;
}

int cmd_sample(const CliOptions& opt) {
    const RunConfig cfg = resolve_config(opt);
    if (opt.sample_count < 1) throw ConfigError("sample count must be >= 1");
    const auto problems = sample_problems(opt.sample_count, cfg.seed);
    std::vector<LabeledProblem> rows;
    rows.reserve(problems.size());
    for (const Problem& p : problems) rows.push_back({p, {}, false});
    const std::string out_path = require_path(cfg.out, "--out");
    write_problem_csv(out_path, rows, false);
    std::cout << "wrote " << rows.size() << " problems to " << out_path << "\n";
    return 0;
}

void add_common_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config, "JSON config file");
    cmd->add_option("--seed", opt.seed, "RNG seed (overrides config)");
    cmd->add_option("--data", opt.data, "input problems CSV");
    cmd->add_option("--bundle", opt.bundle, "model bundle directory");
    cmd->add_option("--out", opt.out, "output file");
    cmd->add_option("--folds", opt.folds, "CV fold count (overrides config)");
    cmd->add_option("--samples", opt.samples, "scaler sample count (overrides config)");
    cmd->add_option("--checks", opt.checks, "anomaly checks file");
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"behavioral B-rate prediction for two-gamble choice problems"};
    app.require_subcommand(1);

    CliOptions opt;
    auto* fit = app.add_subcommand("fit-scaler", "sample problems and fit the entry scalers");
    auto* train_cmd = app.add_subcommand("train", "cross-validate the grid and train a bundle");
    auto* predict_cmd = app.add_subcommand("predict", "predict B-rates for a problems CSV");
    auto* eval_cmd = app.add_subcommand("evaluate", "score a labeled CSV and run anomaly checks");
    auto* sample_cmd = app.add_subcommand("sample", "draw random problems to a CSV");
    for (auto* cmd : {fit, train_cmd, predict_cmd, eval_cmd, sample_cmd})
        add_common_flags(cmd, opt);
    sample_cmd->add_option("--count", opt.sample_count, "number of problems to draw");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fit->parsed()) return cmd_fit_scaler(opt);
        if (train_cmd->parsed()) return cmd_train(opt);
        if (predict_cmd->parsed()) return cmd_predict(opt);
        if (eval_cmd->parsed()) return cmd_evaluate(opt);
        if (sample_cmd->parsed()) return cmd_sample(opt);
        std::cerr << "no command given\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace choicepred
