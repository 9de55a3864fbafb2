#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "conceptflow/ingest.hpp"

// Seeded corpus generators with planted ground truth, used by the test
// suites and by `conceptflow synth`.
namespace conceptflow::synthetic {

/// 2013-01-01T00:00:00Z
constexpr Timestamp kEpoch = 1356998400;

struct StreamSpec {
    std::size_t days = 60;
    std::size_t docs_per_day = 200;
    std::size_t background_concepts = 20;
    double min_rate = 0.05;
    double max_rate = 0.3;
    std::string topic = "synthetic";
};

struct BurstSpec {
    StreamSpec stream;
    std::string burst_token = "xburst";
    double base_rate = 0.05;
    double burst_rate = 0.8;
    std::size_t burst_days = 5;
    /// First burst day; when negative it is drawn uniformly from
    /// [5, days - burst_days - 5].
    long burst_start_day = -1;
};

struct BurstCorpus {
    std::vector<Document> documents;
    Timestamp burst_start = 0;  // first instant of the burst
    Timestamp burst_end = 0;    // first instant after the burst
    std::vector<std::string> background_tokens;
};

/// Background concepts occur independently at fixed per-concept rates drawn
/// from [min_rate, max_rate]; the burst token jumps from base_rate to
/// burst_rate for burst_days consecutive days.
BurstCorpus burst_corpus(std::uint64_t seed, const BurstSpec& spec = {});

/// Every day drawn from the same per-concept rates.
std::vector<Document> stationary_corpus(std::uint64_t seed, const StreamSpec& spec);

struct NoiseFixture {
    std::vector<Document> documents;
    std::vector<std::string> cluster_tokens;  // planted co-occurring group
    std::vector<std::string> noise_tokens;    // near-ubiquitous
};

/// Documents from a few latent themes, one of which is the planted 5-token
/// cluster, plus two tokens ("watch", "video") present in almost every
/// document.
NoiseFixture noise_fixture(std::uint64_t seed, std::size_t days = 8, std::size_t docs_per_day = 120);

std::string concept_name(std::size_t index);

}  // namespace conceptflow::synthetic
