#include "choicepred/svr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "choicepred/errors.hpp"
#include "choicepred/io.hpp"

namespace choicepred {

namespace {

constexpr double kTau = 1e-12;

// The dual QP over t = (alpha, alpha*) in [0, C]^{2n}:
//   min 1/2 t'Qt + p't   s.t.  sum_k s_k t_k = 0
// with s_k = +1 for the alpha half and -1 for the alpha* half,
// Q_ab = s_a s_b K(a mod n, b mod n) and p = (eps - y, eps + y).
// Minimizing this is equivalent to maximizing the textbook SVR dual.
class DualSolver {
public:
    DualSolver(const std::vector<std::vector<double>>& x, std::span<const double> y,
               const KernelSpec& spec, const SvrConfig& cfg)
        : n_(x.size()), cfg_(cfg) {
        gram_.resize(n_ * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i; j < n_; ++j) {
                const double k = kernel(x[i], x[j], spec);
                gram_[i * n_ + j] = k;
                gram_[j * n_ + i] = k;
            }
        }
        t_.assign(2 * n_, 0.0);
        grad_.resize(2 * n_);
        for (std::size_t a = 0; a < 2 * n_; ++a) grad_[a] = p_of(a, y);
        y_.assign(y.begin(), y.end());
    }

    // Returns true when the KKT violation dropped below tol.
    bool solve(SolverTrace* trace) {
        int iter = 0;
        bool converged = false;
        while (iter < cfg_.max_passes) {
            const auto [i, j, violation] = select_pair();
            if (violation < cfg_.tol) {
                converged = true;
                break;
            }
            update_pair(i, j);
            ++iter;
            if (trace) trace->objective.push_back(-objective());
        }
        if (trace) trace->iterations = iter;
        return converged;
    }

    double beta(std::size_t k) const { return t_[k] - t_[n_ + k]; }

    double bias() const {
        // v_a = -s_a G_a equals the bias at every free variable; at bound
        // variables it brackets the bias from the I_up / I_low side.
        double sum_free = 0.0;
        int free_count = 0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < 2 * n_; ++a) {
            const double v = -s_of(a) * grad_[a];
            if (t_[a] > 0.0 && t_[a] < cfg_.c) {
                sum_free += v;
                ++free_count;
            } else if (in_up(a)) {
                lo = std::max(lo, v);
            } else {
                hi = std::min(hi, v);
            }
        }
        if (free_count > 0) return sum_free / free_count;
        if (std::isinf(lo) || std::isinf(hi)) return 0.5 * (std::isinf(lo) ? hi : lo);
        return 0.5 * (lo + hi);
    }

private:
    double p_of(std::size_t a, std::span<const double> y) const {
        return a < n_ ? cfg_.epsilon - y[a] : cfg_.epsilon + y[a - n_];
    }
    double s_of(std::size_t a) const { return a < n_ ? 1.0 : -1.0; }
    double q_entry(std::size_t a, std::size_t b) const {
        return s_of(a) * s_of(b) * gram_[(a % n_) * n_ + (b % n_)];
    }
    bool in_up(std::size_t a) const {
        return a < n_ ? t_[a] < cfg_.c : t_[a] > 0.0;
    }
    bool in_low(std::size_t a) const {
        return a < n_ ? t_[a] > 0.0 : t_[a] < cfg_.c;
    }

    struct Pair {
        std::size_t i;
        std::size_t j;
        double violation;
    };

    // Maximal violator from I_up, partner by second-order gain; ties and
    // degenerate curvature fall back to the plain sweep over I_low.
    Pair select_pair() const {
        std::size_t i = 2 * n_;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < 2 * n_; ++a) {
            if (!in_up(a)) continue;
            const double v = -s_of(a) * grad_[a];
            if (v > m) {
                m = v;
                i = a;
            }
        }

        std::size_t j = 2 * n_;
        std::size_t j_sweep = 2 * n_;
        double best_gain = -std::numeric_limits<double>::infinity();
        double big_m = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < 2 * n_; ++a) {
            if (!in_low(a)) continue;
            const double v = -s_of(a) * grad_[a];
            if (v < big_m) {
                big_m = v;
                j_sweep = a;
            }
            const double b = m - v;
            if (b <= 0.0) continue;
            double q = q_entry(i, i) + q_entry(a, a) - 2.0 * s_of(i) * s_of(a) * q_entry(i, a);
            if (q <= 0.0) q = kTau;
            const double gain = b * b / q;
            if (gain > best_gain) {
                best_gain = gain;
                j = a;
            }
        }
        if (j == 2 * n_) j = j_sweep;
        if (i == 2 * n_ || j == 2 * n_) return {0, 0, 0.0};
        return {i, j, m - big_m};
    }

    void update_pair(std::size_t i, std::size_t j) {
        const double c = cfg_.c;
        const double old_i = t_[i];
        const double old_j = t_[j];

        if (s_of(i) != s_of(j)) {
            double quad = q_entry(i, i) + q_entry(j, j) + 2.0 * q_entry(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = t_[i] - t_[j];
            t_[i] += delta;
            t_[j] += delta;
            if (diff > 0.0) {
                if (t_[j] < 0.0) {
                    t_[j] = 0.0;
                    t_[i] = diff;
                }
            } else {
                if (t_[i] < 0.0) {
                    t_[i] = 0.0;
                    t_[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (t_[i] > c) {
                    t_[i] = c;
                    t_[j] = c - diff;
                }
            } else {
                if (t_[j] > c) {
                    t_[j] = c;
                    t_[i] = c + diff;
                }
            }
        } else {
            double quad = q_entry(i, i) + q_entry(j, j) - 2.0 * q_entry(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = t_[i] + t_[j];
            t_[i] -= delta;
            t_[j] += delta;
            if (sum > c) {
                if (t_[i] > c) {
                    t_[i] = c;
                    t_[j] = sum - c;
                }
            } else {
                if (t_[j] < 0.0) {
                    t_[j] = 0.0;
                    t_[i] = sum;
                }
            }
            if (sum > c) {
                if (t_[j] > c) {
                    t_[j] = c;
                    t_[i] = sum - c;
                }
            } else {
                if (t_[i] < 0.0) {
                    t_[i] = 0.0;
                    t_[j] = sum;
                }
            }
        }

        const double di = t_[i] - old_i;
        const double dj = t_[j] - old_j;
        for (std::size_t a = 0; a < 2 * n_; ++a)
            grad_[a] += q_entry(a, i) * di + q_entry(a, j) * dj;
    }

    double objective() const {
        // G = Qt + p, so t'Qt + 2 p't = t'(G + p).
        double f = 0.0;
        for (std::size_t a = 0; a < 2 * n_; ++a)
            f += t_[a] * (grad_[a] + p_of(a, y_));
        return 0.5 * f;
    }

    std::size_t n_;
    SvrConfig cfg_;
    std::vector<double> gram_;
    std::vector<double> t_;
    std::vector<double> grad_;
    std::vector<double> y_;
};

}  // namespace

void validate(const KernelSpec& spec) {
    if (spec.degree < 1) throw std::invalid_argument("kernel degree must be >= 1");
    if (!(spec.scale > 0.0)) throw std::invalid_argument("kernel scale must be positive");
}

double kernel(std::span<const double> x, std::span<const double> z, const KernelSpec& spec) {
    if (x.size() != z.size())
        throw std::invalid_argument("kernel inputs differ in dimension: " +
                                    std::to_string(x.size()) + " vs " + std::to_string(z.size()));
    double dot = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) dot += x[k] * z[k];
    double base = spec.scale * dot + spec.offset;
    double out = 1.0;
    for (int d = 0; d < spec.degree; ++d) out *= base;
    return out;
}

SvrModel train(const std::vector<std::vector<double>>& x, std::span<const double> y,
               const KernelSpec& spec, const SvrConfig& cfg, SolverTrace* trace) {
    validate(spec);
    if (x.size() < 2) throw std::invalid_argument("training needs at least 2 samples");
    if (x.size() != y.size())
        throw std::invalid_argument("sample/target count mismatch");
    const std::size_t dim = x.front().size();
    for (const auto& row : x)
        if (row.size() != dim) throw std::invalid_argument("inconsistent sample dimensions");
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("targets must be finite");
    if (!(cfg.c > 0.0) || !(cfg.epsilon >= 0.0))
        throw std::invalid_argument("require C > 0 and epsilon >= 0");

    DualSolver solver(x, y, spec, cfg);
    const bool converged = solver.solve(trace);

    SvrModel m;
    m.kernel = spec;
    m.c = cfg.c;
    m.epsilon = cfg.epsilon;
    m.converged = converged;
    m.bias = solver.bias();
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double beta = solver.beta(k);
        if (beta != 0.0) {
            m.support_vectors.push_back(x[k]);
            m.dual_coefs.push_back(beta);
        }
    }
    return m;
}

double predict(const SvrModel& m, std::span<const double> x) {
    double out = m.bias;
    for (std::size_t k = 0; k < m.support_vectors.size(); ++k)
        out += m.dual_coefs[k] * kernel(m.support_vectors[k], x, m.kernel);
    return out;
}

void save(const SvrModel& m, const std::filesystem::path& path) {
    std::ostringstream out;
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };

    const std::size_t dim = m.support_vectors.empty() ? 0 : m.support_vectors.front().size();
    out << "svrmodel v1\n";
    out << "kernel poly " << m.kernel.degree << " " << fmt(m.kernel.scale) << " "
        << fmt(m.kernel.offset) << "\n";
    out << "C " << fmt(m.c) << " epsilon " << fmt(m.epsilon) << " converged "
        << (m.converged ? 1 : 0) << "\n";
    out << "nsv " << m.support_vectors.size() << " dim " << dim << "\n";
    for (std::size_t k = 0; k < m.support_vectors.size(); ++k) {
        out << fmt(m.dual_coefs[k]);
        for (double v : m.support_vectors[k]) out << " " << fmt(v);
        out << "\n";
    }
    out << "bias " << fmt(m.bias) << "\n";

    write_file_atomic(path, out.str());
}

SvrModel load(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw DataError("cannot read model file: " + path.string());

    auto fail = [&path]() {
        return DataError("malformed model file: " + path.string());
    };

    std::string magic, version;
    if (!(file >> magic >> version) || magic != "svrmodel") throw fail();
    if (version != "v1")
        throw DataError("unsupported model version '" + version + "' in " + path.string());

    SvrModel m;
    std::string word, kind;
    if (!(file >> word >> kind >> m.kernel.degree >> m.kernel.scale >> m.kernel.offset) ||
        word != "kernel" || kind != "poly")
        throw fail();

    int converged = 0;
    if (!(file >> word >> m.c) || word != "C") throw fail();
    if (!(file >> word >> m.epsilon) || word != "epsilon") throw fail();
    if (!(file >> word >> converged) || word != "converged") throw fail();
    m.converged = converged != 0;

    std::size_t nsv = 0, dim = 0;
    if (!(file >> word >> nsv) || word != "nsv") throw fail();
    if (!(file >> word >> dim) || word != "dim") throw fail();

    m.dual_coefs.resize(nsv);
    m.support_vectors.assign(nsv, std::vector<double>(dim));
    for (std::size_t k = 0; k < nsv; ++k) {
        if (!(file >> m.dual_coefs[k])) throw fail();
        for (std::size_t d = 0; d < dim; ++d)
            if (!(file >> m.support_vectors[k][d])) throw fail();
    }
    if (!(file >> word >> m.bias) || word != "bias") throw fail();
    return m;
}

}  // namespace choicepred
