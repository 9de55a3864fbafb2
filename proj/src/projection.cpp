#include "conceptflow/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "conceptflow/error.hpp"

namespace conceptflow {

namespace {

constexpr double kDuplicateSquaredDistance = 1e-18;  // rows jittered by 1e-9
constexpr double kEntropyTolerance = 1e-12;
constexpr int kCalibrationSteps = 200;
constexpr int kMaxHalvings = 5;

// Conditional distribution p_{.|i} for precision beta; returns its entropy.
double conditional_row(std::span<const double> dist, std::size_t self, double beta,
                       std::span<double> out) {
    double d_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dist.size(); ++j) {
        if (j != self) {
            d_min = std::min(d_min, dist[j]);
        }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        out[j] = j == self ? 0.0 : std::exp(-beta * (dist[j] - d_min));
        sum += out[j];
    }
    double weighted = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        out[j] /= sum;
        if (j != self) {
            weighted += out[j] * (dist[j] - d_min);
        }
    }
    return std::log(sum) + beta * weighted;
}

void recentre(std::vector<double>& y) {
    if (y.empty()) {
        return;
    }
    double mean = 0.0;
    for (double v : y) {
        mean += v;
    }
    mean /= static_cast<double>(y.size());
    for (double& v : y) {
        v -= mean;
    }
}

}  // namespace

double clamp_perplexity(double perplexity, std::size_t m) {
    const double upper = m > 1 ? static_cast<double>(m - 1) / 3.0 : 1.0;
    return std::max(1.0, std::min(perplexity, upper));
}

AffinityMatrix calibrate_affinities(std::size_t m, std::span<const double> squared_distances,
                                    double perplexity) {
    if (m < 2) {
        throw Error("projection", "degenerate frame: fewer than two concepts");
    }
    if (squared_distances.size() != m * m) {
        throw Error("projection", "distance matrix size mismatch");
    }
    if (!(perplexity >= 1.0)) {
        throw Error("projection", "perplexity must be at least 1");
    }
    const double target = std::log(perplexity);
    std::vector<double> cond(m * m, 0.0);
    std::vector<double> dist(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double d = squared_distances[i * m + j];
            if (j != i && d <= 0.0) {
                d = kDuplicateSquaredDistance;
            }
            dist[j] = d;
        }
        std::span<double> row(cond.data() + i * m, m);
        double beta = 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        for (int step = 0; step < kCalibrationSteps; ++step) {
            const double entropy = conditional_row(dist, i, beta, row);
            const double diff = entropy - target;
            if (std::fabs(diff) < kEntropyTolerance) {
                break;
            }
            if (diff > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
    }
    AffinityMatrix out;
    out.m = m;
    out.perplexity = perplexity;
    out.p.assign(m * m, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j) {
                out.p[i * m + j] = (cond[i * m + j] + cond[j * m + i]) / (2.0 * static_cast<double>(m));
                total += out.p[i * m + j];
            }
        }
    }
    for (double& v : out.p) {
        v /= total;
    }
    return out;
}

AffinityMatrix affinities(const ConceptFeatureMatrix& g, double perplexity) {
    const std::size_t m = g.rows();
    if (m < 2) {
        throw Error("projection", "degenerate frame: fewer than two concepts");
    }
    std::vector<double> dist(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            dist[i * m + j] = dist[j * m + i] = g.squared_distance(i, j);
        }
    }
    return calibrate_affinities(m, dist, clamp_perplexity(perplexity, m));
}

std::vector<double> q_matrix(std::span<const double> positions) {
    const std::size_t m = positions.size();
    std::vector<double> q(m * m, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j) {
                const double d = positions[i] - positions[j];
                q[i * m + j] = 1.0 / (1.0 + d * d);
                total += q[i * m + j];
            }
        }
    }
    if (total > 0.0) {
        for (double& v : q) {
            v /= total;
        }
    }
    return q;
}

double kl(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw Error("projection", "kl: distributions differ in size");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            sum += p[i] * std::log(p[i] / std::max(q[i], kProbabilityFloor));
        }
    }
    return sum;
}

double ConstraintTerms::kl() const {
    double sum = 0.0;
    for (std::size_t k = 0; k < pc.size(); ++k) {
        sum += pc[k] * std::log(pc[k] / std::max(qc[k], kProbabilityFloor));
    }
    return sum;
}

ConstraintTerms constraint_terms(std::span<const double> positions, std::span<const Anchor> anchors,
                                 bool invert_pc) {
    ConstraintTerms terms;
    terms.index.reserve(anchors.size());
    terms.pc.reserve(anchors.size());
    terms.qc.reserve(anchors.size());
    for (const auto& a : anchors) {
        const double d = positions[a.index] - a.position;
        terms.index.push_back(a.index);
        terms.pc.push_back(a.mutated != invert_pc ? 1.0 : 0.5);
        terms.qc.push_back(1.0 / (1.0 + d * d));
    }
    return terms;
}

CostEvaluation evaluate_cost(const AffinityMatrix& p, std::span<const double> positions,
                             std::span<const Anchor> anchors, double alpha, double exaggeration,
                             bool invert_pc) {
    const std::size_t m = positions.size();
    CostEvaluation out;
    out.gradient.assign(m, 0.0);

    if (m >= 2) {
        if (p.m != m) {
            throw Error("projection", "affinity matrix does not match position count");
        }
        std::vector<double> kernel(m * m, 0.0);
        double z = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const double d = positions[i] - positions[j];
                const double k = 1.0 / (1.0 + d * d);
                kernel[i * m + j] = kernel[j * m + i] = k;
                z += 2.0 * k;
            }
        }
        double cost = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double g = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) {
                    continue;
                }
                const double pij = p.p[i * m + j];
                const double k = kernel[i * m + j];
                const double qij = k / z;
                g += (exaggeration * pij - qij) * (positions[i] - positions[j]) * k;
                if (pij > 0.0) {
                    cost += pij * std::log(pij / std::max(qij, kProbabilityFloor));
                }
            }
            out.gradient[i] = alpha * 4.0 * g;
        }
        out.kl_main = cost;
    }

    double constraint = 0.0;
    for (const auto& a : anchors) {
        const double d = positions[a.index] - a.position;
        const double pc = a.mutated != invert_pc ? 1.0 : 0.5;
        const double qc = 1.0 / (1.0 + d * d);
        constraint += pc * std::log(pc / std::max(qc, kProbabilityFloor));
        out.gradient[a.index] += (1.0 - alpha) * 2.0 * pc * d / (1.0 + d * d);
    }
    out.kl_constraint = constraint;
    out.total = alpha * out.kl_main + (1.0 - alpha) * out.kl_constraint;
    return out;
}

double effective_learning_rate(const OptimizerParams& params, const AffinityMatrix& p,
                               std::span<const Anchor> anchors, double alpha, bool invert_pc) {
    double rate = params.learning_rate;
    if (!params.adaptive_learning_rate) {
        return rate;
    }
    if (alpha > 0.0 && p.m >= 2) {
        // The attractive part of the main-term Hessian is bounded by
        // 4 * exaggeration * max_i sum_j p_ij.
        double row_max = 0.0;
        for (std::size_t i = 0; i < p.m; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < p.m; ++j) {
                row += p.p[i * p.m + j];
            }
            row_max = std::max(row_max, row);
        }
        const double stiffness = 4.0 * alpha * std::max(params.exaggeration, 1.0) * row_max;
        rate = std::min(rate, 1.0 / stiffness);
    }
    if (alpha < 1.0) {
        double pc_max = 0.0;
        for (const auto& a : anchors) {
            pc_max = std::max(pc_max, a.mutated != invert_pc ? 1.0 : 0.5);
        }
        if (pc_max > 0.0) {
            // Constraint curvature at the anchor is 2 (1 - alpha) P_c.
            rate = std::min(rate, 1.0 / ((1.0 - alpha) * pc_max));
        }
    }
    return rate;
}

OptimizationResult optimize(const AffinityMatrix& p, std::span<const double> init,
                            std::span<const Anchor> anchors, double alpha, const OptimizerParams& params,
                            bool invert_pc) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw Error("projection", "alpha_proj must lie in [0, 1]");
    }
    const std::size_t m = init.size();
    const bool unanchored = anchors.empty() || alpha == 1.0;
    double learning_rate = effective_learning_rate(params, p, anchors, alpha, invert_pc);

    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
        std::vector<double> y(init.begin(), init.end());
        std::vector<double> update(m, 0.0);
        std::vector<double> gains(m, 1.0);
        OptimizationResult result;
        bool finite = true;

        for (int iter = 0; iter < params.iterations; ++iter) {
            const double exaggeration =
                iter < params.exaggeration_iterations ? params.exaggeration : 1.0;
            const double momentum =
                iter < params.momentum_switch ? params.initial_momentum : params.final_momentum;
            auto eval = evaluate_cost(p, y, anchors, alpha, exaggeration, invert_pc);
            if (!std::isfinite(eval.total)) {
                finite = false;
                break;
            }
            if (params.record_trace) {
                result.cost.trace.push_back(eval.total);
            }
            for (std::size_t i = 0; i < m; ++i) {
                const double g = eval.gradient[i];
                if (params.use_gains) {
                    gains[i] = (g > 0.0) != (update[i] > 0.0) ? gains[i] + 0.2 : gains[i] * 0.8;
                    gains[i] = std::max(gains[i], params.min_gain);
                }
                update[i] = momentum * update[i] - learning_rate * gains[i] * g;
                y[i] += update[i];
                if (!std::isfinite(y[i])) {
                    finite = false;
                }
            }
            if (!finite) {
                break;
            }
            if (unanchored) {
                // Keeps a collapsed configuration near zero, where its
                // spread stays resolvable in floating point.
                recentre(y);
            }
        }
        if (!finite) {
            learning_rate *= 0.5;
            continue;
        }
        auto final_eval = evaluate_cost(p, y, anchors, alpha, 1.0, invert_pc);
        if (!std::isfinite(final_eval.total)) {
            learning_rate *= 0.5;
            continue;
        }
        double norm = 0.0;
        for (double g : final_eval.gradient) {
            norm += g * g;
        }
        result.positions = std::move(y);
        result.cost.kl_main = final_eval.kl_main;
        result.cost.kl_constraint = final_eval.kl_constraint;
        result.cost.total = final_eval.total;
        result.cost.iterations = params.iterations;
        result.cost.grad_norm_final = std::sqrt(norm);
        result.cost.learning_rate = learning_rate;
        return result;
    }
    throw Error("projection", "non-finite cost after " + std::to_string(kMaxHalvings) +
                                  " learning-rate halvings");
}

const double* ProjectionFrame::position_of(const std::string& token) const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == token) {
            return &positions[i];
        }
    }
    return nullptr;
}

std::vector<double> initial_positions(std::span<const std::string> tokens,
                                      const std::map<std::string, double>& prev, std::uint64_t seed,
                                      double sigma) {
    std::vector<double> anchored;
    for (const auto& token : tokens) {
        if (auto it = prev.find(token); it != prev.end()) {
            anchored.push_back(it->second);
        }
    }
    double center = 0.0;
    if (!anchored.empty()) {
        std::sort(anchored.begin(), anchored.end());
        const std::size_t mid = anchored.size() / 2;
        center = anchored.size() % 2 == 1 ? anchored[mid] : 0.5 * (anchored[mid - 1] + anchored[mid]);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> y;
    y.reserve(tokens.size());
    for (const auto& token : tokens) {
        if (auto it = prev.find(token); it != prev.end()) {
            y.push_back(it->second);
        } else {
            y.push_back(center + noise(rng));
        }
    }
    return y;
}

ProjectionFrame project_frame(const ConceptFeatureMatrix& g, std::span<const std::string> tokens,
                              const std::map<std::string, double>& prev,
                              const std::vector<bool>& mutation_flags, const ProjectionParams& params) {
    if (g.rows() != tokens.size()) {
        throw Error("projection", "feature rows do not match concept tokens");
    }
    if (!mutation_flags.empty() && mutation_flags.size() != tokens.size()) {
        throw Error("projection", "mutation flags do not match concept tokens");
    }
    if (!(params.alpha_proj >= 0.0 && params.alpha_proj <= 1.0)) {
        throw Error("projection", "alpha_proj must lie in [0, 1]");
    }
    ProjectionFrame frame;
    frame.tokens.assign(tokens.begin(), tokens.end());
    frame.mutation_flags = mutation_flags.empty() ? std::vector<bool>(tokens.size(), false) : mutation_flags;
    frame.seed = params.seed;

    std::vector<Anchor> anchors;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (auto it = prev.find(tokens[i]); it != prev.end()) {
            anchors.push_back({i, it->second, frame.mutation_flags[i]});
            frame.prev_positions.emplace(tokens[i], it->second);
        }
    }
    frame.alpha_proj = anchors.empty() ? 1.0 : params.alpha_proj;

    AffinityMatrix p;
    if (tokens.size() >= 2) {
        p = affinities(g, params.perplexity);
    }
    auto init = initial_positions(tokens, prev, params.seed, params.optimizer.init_sigma);
    auto result = optimize(p, init, anchors, frame.alpha_proj, params.optimizer, params.invert_pc);
    frame.positions = std::move(result.positions);
    frame.cost = std::move(result.cost);
    return frame;
}

std::vector<ProjectionFrame> chain_project(std::span<const FrameInput> frames,
                                           const ProjectionParams& params) {
    if (frames.empty()) {
        throw Error("projection", "no frames to project");
    }
    std::vector<ProjectionFrame> out;
    out.reserve(frames.size());
    std::map<std::string, double> prev;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        ProjectionParams frame_params = params;
        frame_params.seed = params.seed + t;
        auto frame = project_frame(frames[t].features, frames[t].tokens, prev, frames[t].mutation_flags,
                                   frame_params);
        prev.clear();
        for (std::size_t i = 0; i < frame.tokens.size(); ++i) {
            prev.emplace(frame.tokens[i], frame.positions[i]);
        }
        out.push_back(std::move(frame));
    }
    return out;
}

}  // namespace conceptflow
