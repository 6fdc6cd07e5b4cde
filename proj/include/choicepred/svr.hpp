#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace choicepred {

struct KernelSpec {
    int degree = 3;
    double scale = 1.0 / 24.0;
    double offset = 1.0;
};

void validate(const KernelSpec& spec);

// (scale * <x, z> + offset)^degree. Throws std::invalid_argument on
// dimension mismatch.
double kernel(std::span<const double> x, std::span<const double> z, const KernelSpec& spec);

struct SvrConfig {
    double c = 1.0;        // box penalty
    double epsilon = 0.05;  // insensitive tube half-width
    double tol = 1e-3;     // maximal allowed KKT violation
    int max_passes = 10000;  // working-pair updates before giving up
};

// Epsilon-insensitive support vector regressor. dual_coefs holds
// beta_k = alpha_k - alpha*_k for the retained support vectors;
// sum(dual_coefs) == 0 and |beta_k| <= c.
struct SvrModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;
    double bias = 0.0;
    KernelSpec kernel;
    double c = 1.0;
    double epsilon = 0.05;
    bool converged = true;
};

// Dual objective after each working-pair update; non-decreasing by
// construction.
struct SolverTrace {
    std::vector<double> objective;
    int iterations = 0;
};

// Trains by pairwise coordinate ascent on the SVR dual: the maximal KKT
// violator is paired with the second-order best partner until the violation
// drops below cfg.tol or cfg.max_passes updates have run. On non-convergence
// the best iterate is returned with converged = false.
SvrModel train(const std::vector<std::vector<double>>& x, std::span<const double> y,
               const KernelSpec& spec, const SvrConfig& cfg, SolverTrace* trace = nullptr);

double predict(const SvrModel& m, std::span<const double> x);

// Versioned plain-text persistence; load(save(m)) reproduces coefficients
// bit for bit.
void save(const SvrModel& m, const std::filesystem::path& path);
SvrModel load(const std::filesystem::path& path);

}  // namespace choicepred
