#pragma once

// Independent reference implementations used as test oracles. They follow
// the textbook formulas directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

// p_{j|i} for precision beta, straight from the Gaussian kernel definition.
inline std::vector<double> conditional(const Matrix& d2, std::size_t i, double beta) {
    const std::size_t m = d2.size();
    std::vector<double> p(m, 0.0);
    double z = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (k != i) {
            z += std::exp(-beta * d2[i][k]);
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (j != i) {
            p[j] = std::exp(-beta * d2[i][j]) / z;
        }
    }
    return p;
}

inline double perplexity_of(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 0.0) {
            h -= v * std::log(v);
        }
    }
    return std::exp(h);
}

// Solves Perp(p_{.|i}) = target by bisection on log(beta) over a wide
// bracket, then forms p_ij = (p_{j|i} + p_{i|j}) / 2M.
inline Matrix joint_affinities(const Matrix& d2, double target) {
    const std::size_t m = d2.size();
    Matrix cond(m);
    for (std::size_t i = 0; i < m; ++i) {
        double lo = -60.0;
        double hi = 60.0;
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            // Perplexity decreases as beta grows.
            if (perplexity_of(conditional(d2, i, std::exp(mid))) > target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        cond[i] = conditional(d2, i, std::exp(0.5 * (lo + hi)));
    }
    Matrix p(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j) {
                p[i][j] = (cond[i][j] + cond[j][i]) / (2.0 * static_cast<double>(m));
            }
        }
    }
    return p;
}

inline Matrix student_q(const std::vector<double>& y) {
    const std::size_t m = y.size();
    Matrix q(m, std::vector<double>(m, 0.0));
    double z = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = 0; l < m; ++l) {
            if (k != l) {
                z += 1.0 / (1.0 + (y[k] - y[l]) * (y[k] - y[l]));
            }
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j) {
                q[i][j] = 1.0 / (1.0 + (y[i] - y[j]) * (y[i] - y[j])) / z;
            }
        }
    }
    return q;
}

struct Schedule {
    int iterations = 1000;
    double learning_rate = 50.0;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    int momentum_switch = 250;
    double exaggeration = 4.0;
    int exaggeration_iterations = 100;
    bool gains = false;
    double min_gain = 0.01;
};

// Plain 1-D t-SNE: dC/dy_i = 4 sum_j (p_ij - q_ij)(y_i - y_j)(1 + (y_i - y_j)^2)^-1,
// momentum descent (optionally with adaptive gains), re-centred on zero
// after every step.
inline std::vector<double> tsne_1d(const Matrix& p, std::vector<double> y, const Schedule& s = {}) {
    const std::size_t m = y.size();
    std::vector<double> velocity(m, 0.0);
    std::vector<double> gains(m, 1.0);
    for (int it = 0; it < s.iterations; ++it) {
        const double ex = it < s.exaggeration_iterations ? s.exaggeration : 1.0;
        const double mom = it < s.momentum_switch ? s.momentum_early : s.momentum_late;
        const Matrix q = student_q(y);
        std::vector<double> grad(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                if (i != j) {
                    const double diff = y[i] - y[j];
                    grad[i] += 4.0 * (ex * p[i][j] - q[i][j]) * diff / (1.0 + diff * diff);
                }
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (s.gains) {
                const bool same_sign = (grad[i] > 0.0) == (velocity[i] > 0.0);
                gains[i] = same_sign ? gains[i] * 0.8 : gains[i] + 0.2;
                if (gains[i] < s.min_gain) {
                    gains[i] = s.min_gain;
                }
            }
            velocity[i] = mom * velocity[i] - s.learning_rate * gains[i] * grad[i];
            y[i] += velocity[i];
        }
        double mean = 0.0;
        for (double v : y) {
            mean += v;
        }
        mean /= static_cast<double>(m);
        for (double& v : y) {
            v -= mean;
        }
    }
    return y;
}

}  // namespace oracle
