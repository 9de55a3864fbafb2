#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "conceptflow/features.hpp"

namespace conceptflow {

/// Symmetric joint probabilities over concept pairs, row-major M x M with a
/// zero diagonal and total mass 1.
struct AffinityMatrix {
    std::size_t m = 0;
    double perplexity = 0.0;  // after clamping
    std::vector<double> p;

    double at(std::size_t i, std::size_t j) const { return p[i * m + j]; }
};

/// Perplexity actually used for an M-point frame: clamped to [1, (M-1)/3].
double clamp_perplexity(double perplexity, std::size_t m);

/// Gaussian conditional probabilities calibrated per point to `perplexity`
/// by bisection on the precision, then symmetrised and normalised.
/// `squared_distances` is row-major M x M. No clamping is applied.
AffinityMatrix calibrate_affinities(std::size_t m, std::span<const double> squared_distances,
                                    double perplexity);

/// Affinities of the concept feature rows. Throws for M < 2.
AffinityMatrix affinities(const ConceptFeatureMatrix& g, double perplexity);

/// Student-t joint probabilities of 1-D positions, row-major M x M.
std::vector<double> q_matrix(std::span<const double> positions);

constexpr double kProbabilityFloor = 1e-12;

/// sum p log(p / q) in nats; entries with p = 0 contribute nothing and q is
/// floored at kProbabilityFloor.
double kl(std::span<const double> p, std::span<const double> q);

/// Previous-frame position of a concept that also exists in the current frame.
struct Anchor {
    std::size_t index = 0;  // row in the current frame
    double position = 0.0;  // y' from the previous frame
    bool mutated = false;
};

/// Per-anchor virtual-point probabilities: P_c is 1 for mutated concepts and
/// 0.5 otherwise (swapped when `invert_pc`), Q_c = 1 / (1 + (y - y')^2).
struct ConstraintTerms {
    std::vector<std::size_t> index;
    std::vector<double> pc;
    std::vector<double> qc;

    /// sum P_c log(P_c / Q_c)
    double kl() const;
};

ConstraintTerms constraint_terms(std::span<const double> positions, std::span<const Anchor> anchors,
                                 bool invert_pc = false);

struct CostEvaluation {
    double kl_main = 0.0;
    double kl_constraint = 0.0;
    double total = 0.0;
    std::vector<double> gradient;
};

/// alpha * KL(P||Q) + (1 - alpha) * KL(P_c||Q_c) and its gradient. The
/// exaggeration factor multiplies P in the gradient only; the reported costs
/// always use the unscaled P. `p` may be empty when M < 2.
CostEvaluation evaluate_cost(const AffinityMatrix& p, std::span<const double> positions,
                             std::span<const Anchor> anchors, double alpha, double exaggeration = 1.0,
                             bool invert_pc = false);

struct OptimizerParams {
    int iterations = 1000;
    double learning_rate = 50.0;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    double exaggeration = 4.0;
    int exaggeration_iterations = 100;
    /// Per-coordinate gains (+0.2 on a sign change, x0.8 otherwise).
    bool use_gains = false;
    double min_gain = 0.01;
    /// Cap the step by the cost curvature (see effective_learning_rate);
    /// learning_rate is then only an upper bound.
    bool adaptive_learning_rate = true;
    double init_sigma = 1e-2;
    /// Keep the total cost of every iteration in CostReport::trace.
    bool record_trace = false;
};

struct CostReport {
    double kl_main = 0.0;
    double kl_constraint = 0.0;
    double total = 0.0;
    int iterations = 0;
    double grad_norm_final = 0.0;
    double learning_rate = 0.0;  // effective, after any step halving
    std::vector<double> trace;
};

struct OptimizationResult {
    std::vector<double> positions;
    CostReport cost;
};

/// Step size used by optimize before any halving: learning_rate, capped by
/// the reciprocal curvature bounds of the main term (4 * alpha *
/// exaggeration * max row sum of P) and of the constraint term
/// (2 * (1 - alpha) * max P_c, halved for momentum headroom).
double effective_learning_rate(const OptimizerParams& params, const AffinityMatrix& p,
                               std::span<const Anchor> anchors, double alpha, bool invert_pc = false);

/// Momentum gradient descent with per-coordinate gains and early
/// exaggeration. Positions are re-centred after every step when no anchor
/// constrains them (alpha == 1 or no anchors). A non-finite cost halves the
/// learning rate and restarts from `init`; the sixth failure is fatal.
OptimizationResult optimize(const AffinityMatrix& p, std::span<const double> init,
                            std::span<const Anchor> anchors, double alpha, const OptimizerParams& params,
                            bool invert_pc = false);

struct ProjectionParams {
    double alpha_proj = 0.7;
    double perplexity = 10.0;
    std::uint64_t seed = 42;
    bool invert_pc = false;
    OptimizerParams optimizer;
};

struct ProjectionFrame {
    std::vector<std::string> tokens;
    std::vector<double> positions;
    std::map<std::string, double> prev_positions;  // shared concepts only
    std::vector<bool> mutation_flags;
    double alpha_proj = 1.0;  // effective weight used for this frame
    std::uint64_t seed = 0;
    CostReport cost;

    /// Position of `token`, or nullptr when the concept is not in the frame.
    const double* position_of(const std::string& token) const;
};

/// Starting positions: anchored concepts at their previous position, others at
/// median(previous) (0 without anchors) plus seeded Gaussian noise.
std::vector<double> initial_positions(std::span<const std::string> tokens,
                                      const std::map<std::string, double>& prev, std::uint64_t seed,
                                      double sigma);

/// Projects one frame. Concepts of `tokens` found in `prev` become anchors;
/// without anchors the frame is unconstrained (alpha treated as 1).
ProjectionFrame project_frame(const ConceptFeatureMatrix& g, std::span<const std::string> tokens,
                              const std::map<std::string, double>& prev,
                              const std::vector<bool>& mutation_flags, const ProjectionParams& params);

struct FrameInput {
    std::vector<std::string> tokens;
    ConceptFeatureMatrix features;
    std::vector<bool> mutation_flags;
};

/// Projects frames in order, each anchored on its predecessor. Frame t uses
/// seed + t.
std::vector<ProjectionFrame> chain_project(std::span<const FrameInput> frames,
                                           const ProjectionParams& params);

}  // namespace conceptflow
