#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "conceptflow/ingest.hpp"

namespace conceptflow {

/// Occurrence counts of one concept in one window: `hits` documents out of `n`.
struct OccurrenceStats {
    std::size_t hits = 0;
    std::size_t n = 0;
};

/// Fixed-width window of the base grid. Document references are indices
/// into the TokenizedCorpus the slice was built from.
struct BaseSlice {
    Timestamp start = 0;
    Timestamp end = 0;  // exclusive
    std::vector<std::size_t> docs;
    std::vector<std::size_t> hits;  // per concept
    std::vector<double> occ_rate;   // hits / n, 0 for an empty slice

    std::size_t n() const { return docs.size(); }
    OccurrenceStats stats(std::size_t index) const { return {hits.at(index), docs.size()}; }
};

struct TTestResult {
    std::string token;
    double t_stat = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    bool mutated = false;
};

struct TimeSlice {
    Timestamp start = 0;
    Timestamp end = 0;
    std::vector<std::size_t> docs;
    bool anomalous_boundary = false;
    std::vector<bool> mutation_flags;  // per concept, mutations at the opening boundary

    std::size_t n() const { return docs.size(); }
};

struct SlicingParams {
    double sig = 0.05;
    std::size_t m_min = 1;
    Timestamp max_duration = 90 * kSecondsPerDay;
};

/// Verdict for one boundary between adjacent (post-merge) base slices.
struct BoundaryVerdict {
    Timestamp at = 0;
    std::size_t mutated_count = 0;
    bool cut = false;
    std::vector<bool> mutated;
};

struct SlicingResult {
    std::vector<TimeSlice> slices;
    std::vector<BoundaryVerdict> boundaries;
};

/// Parses "30s", "15m", "12h", "1d", "2w" (or a bare number of seconds).
Timestamp parse_duration(std::string_view text);

/// Contiguous half-open windows of width `granularity` covering every
/// document. The first window starts at the largest multiple of
/// `granularity` (since the epoch) not after the earliest document, so daily
/// windows align with UTC midnight. `concepts` fills hits and occ_rate.
std::vector<BaseSlice> uniform_slices(const TokenizedCorpus& corpus, Timestamp granularity,
                                      std::span<const std::string> concepts = {});

/// Welch's two-sample t-test on Bernoulli occurrence indicators. `mutated`
/// is set when the two-sided p-value is below `threshold`.
TTestResult welch_t(OccurrenceStats a, OccurrenceStats b, double threshold = 0.05);

/// Windows with fewer than two documents are folded into their successor
/// (the last one into its predecessor) so every window supports a t-test.
std::vector<BaseSlice> merge_sparse(std::vector<BaseSlice> base);

/// Tests every adjacent pair of base windows per concept with Bonferroni
/// correction (sig / M). A boundary with at least m_min mutated concepts is
/// a cut; runs of uncut windows merge into one TimeSlice. A run longer than
/// `max_duration` is also cut there, without the anomalous flag.
SlicingResult detect_boundaries(std::span<const BaseSlice> base, std::size_t concept_count,
                                const SlicingParams& params = {},
                                std::span<const std::string> concepts = {});

/// Per-concept welch_t verdicts for one boundary, Bonferroni corrected.
std::vector<TTestResult> test_boundary(const BaseSlice& before, const BaseSlice& after,
                                       double sig, std::span<const std::string> concepts = {});

}  // namespace conceptflow
