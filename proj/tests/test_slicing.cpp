#include <random>

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include "conceptflow/error.hpp"
#include "conceptflow/slicing.hpp"
#include "conceptflow/synthetic.hpp"

using namespace conceptflow;

namespace {

constexpr Timestamp kDay = kSecondsPerDay;
constexpr Timestamp kT0 = synthetic::kEpoch;

TokenizedCorpus corpus_at(const std::vector<Timestamp>& times, const std::vector<std::string>& texts = {}) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < times.size(); ++i) {
        docs.push_back({"d" + std::to_string(i), times[i], texts.empty() ? "word" : texts[i], "g", "t"});
    }
    return TokenizedCorpus::build(docs, Tokenizer());
}

BaseSlice window(Timestamp start, std::size_t n, std::vector<std::size_t> hits, std::size_t first_doc) {
    BaseSlice s;
    s.start = start;
    s.end = start + kDay;
    for (std::size_t i = 0; i < n; ++i) {
        s.docs.push_back(first_doc + i);
    }
    s.hits = std::move(hits);
    for (auto h : s.hits) {
        s.occ_rate.push_back(n ? static_cast<double>(h) / static_cast<double>(n) : 0.0);
    }
    return s;
}

}  // namespace

TEST(ParseDuration, Units) {
    EXPECT_EQ(parse_duration("1d"), kDay);
    EXPECT_EQ(parse_duration("12h"), kDay / 2);
    EXPECT_EQ(parse_duration("30m"), 1800);
    EXPECT_EQ(parse_duration("2w"), 14 * kDay);
    EXPECT_EQ(parse_duration("90"), 90);
    EXPECT_THROW(parse_duration("x"), Error);
    EXPECT_THROW(parse_duration("0d"), Error);
}

TEST(UniformSlices, TenDays) {
    std::vector<Timestamp> times;
    for (int d = 0; d < 10; ++d) {
        times.push_back(kT0 + d * kDay + 3600);
    }
    auto slices = uniform_slices(corpus_at(times), kDay);
    ASSERT_EQ(slices.size(), 10u);
    for (std::size_t i = 0; i < slices.size(); ++i) {
        EXPECT_EQ(slices[i].start, kT0 + static_cast<Timestamp>(i) * kDay);
        EXPECT_EQ(slices[i].end - slices[i].start, kDay);
        EXPECT_EQ(slices[i].n(), 1u);
    }
}

TEST(UniformSlices, BoundaryInstantBelongsToLaterSlice) {
    auto slices = uniform_slices(corpus_at({kT0 + 100, kT0 + kDay}), kDay);
    ASSERT_EQ(slices.size(), 2u);
    EXPECT_EQ(slices[0].docs, std::vector<std::size_t>{0});
    EXPECT_EQ(slices[1].docs, std::vector<std::size_t>{1});
    EXPECT_EQ(slices[1].start, kT0 + kDay);
}

TEST(UniformSlices, SameTimestamp) {
    auto slices = uniform_slices(corpus_at({kT0 + 5, kT0 + 5, kT0 + 5}), kDay);
    ASSERT_EQ(slices.size(), 1u);
    EXPECT_EQ(slices[0].n(), 3u);
}

TEST(UniformSlices, HitsAndRates) {
    auto c = corpus_at({kT0, kT0 + 1, kT0 + kDay}, {"senate vote", "senate", "vote"});
    const std::vector<std::string> concepts = {"senate", "vote"};
    auto slices = uniform_slices(c, kDay, concepts);
    ASSERT_EQ(slices.size(), 2u);
    EXPECT_EQ(slices[0].hits, (std::vector<std::size_t>{2, 1}));
    EXPECT_DOUBLE_EQ(slices[0].occ_rate[1], 0.5);
    EXPECT_EQ(slices[1].hits, (std::vector<std::size_t>{0, 1}));
}

TEST(UniformSlices, EmptyCorpusIsAnError) {
    EXPECT_THROW(uniform_slices(corpus_at({}), kDay), Error);
}

TEST(WelchT, IdenticalSamples) {
    auto r = welch_t({5, 10}, {5, 10});
    EXPECT_EQ(r.t_stat, 0.0);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_FALSE(r.mutated);
}

TEST(WelchT, NineVersusOneMatchesReference) {
    auto r = welch_t({9, 10}, {1, 10}, 0.05);
    // Sample variances 0.1 each, so t = 0.8 / sqrt(0.02) and the
    // Welch-Satterthwaite dof is 18.
    const double t = 0.8 / std::sqrt(0.02);
    boost::math::students_t dist(18.0);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    EXPECT_NEAR(r.t_stat, t, 1e-12);
    EXPECT_NEAR(r.dof, 18.0, 1e-12);
    EXPECT_NEAR(r.p_value, p, 1e-12);
    EXPECT_TRUE(r.mutated);
}

TEST(WelchT, DegenerateBranches) {
    auto r = welch_t({10, 10}, {0, 10});
    EXPECT_TRUE(r.mutated);
    EXPECT_EQ(r.p_value, 0.0);
    EXPECT_TRUE(std::isinf(r.t_stat));
    EXPECT_GT(r.t_stat, 0.0);

    auto same = welch_t({0, 10}, {0, 7});
    EXPECT_FALSE(same.mutated);
    EXPECT_EQ(same.p_value, 1.0);

    EXPECT_THROW(welch_t({1, 1}, {1, 10}), Error);
    EXPECT_THROW(welch_t({11, 10}, {1, 10}), Error);
}

TEST(WelchT, Antisymmetric) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        std::uniform_int_distribution<std::size_t> n(2, 300);
        const auto na = n(rng), nb = n(rng);
        const auto ha = std::uniform_int_distribution<std::size_t>(0, na)(rng);
        const auto hb = std::uniform_int_distribution<std::size_t>(0, nb)(rng);
        auto ab = welch_t({ha, na}, {hb, nb});
        auto ba = welch_t({hb, nb}, {ha, na});
        EXPECT_EQ(ab.t_stat, -ba.t_stat);
        EXPECT_EQ(ab.p_value, ba.p_value);
        EXPECT_GE(ab.p_value, 0.0);
        EXPECT_LE(ab.p_value, 1.0);
    }
}

TEST(DetectBoundaries, SingleBaseSlice) {
    std::vector<BaseSlice> base = {window(kT0, 10, {3, 4}, 0)};
    auto r = detect_boundaries(base, 2);
    ASSERT_EQ(r.slices.size(), 1u);
    EXPECT_TRUE(r.boundaries.empty());
    EXPECT_EQ(r.slices[0].mutation_flags, (std::vector<bool>{false, false}));
    EXPECT_FALSE(r.slices[0].anomalous_boundary);
}

TEST(DetectBoundaries, CutAtChangeWithFlags) {
    std::vector<BaseSlice> base = {window(kT0, 100, {5, 50}, 0), window(kT0 + kDay, 100, {6, 50}, 100),
                                   window(kT0 + 2 * kDay, 100, {80, 50}, 200),
                                   window(kT0 + 3 * kDay, 100, {79, 51}, 300)};
    auto r = detect_boundaries(base, 2);
    ASSERT_EQ(r.slices.size(), 2u);
    EXPECT_EQ(r.slices[1].start, kT0 + 2 * kDay);
    EXPECT_TRUE(r.slices[1].anomalous_boundary);
    EXPECT_EQ(r.slices[1].mutation_flags, (std::vector<bool>{true, false}));
    EXPECT_EQ(r.slices[0].docs.size(), 200u);
    ASSERT_EQ(r.boundaries.size(), 3u);
    EXPECT_FALSE(r.boundaries[0].cut);
    EXPECT_TRUE(r.boundaries[1].cut);
}

TEST(DetectBoundaries, MMinRequiresSeveralMutations) {
    std::vector<BaseSlice> base = {window(kT0, 100, {5, 50}, 0), window(kT0 + kDay, 100, {80, 50}, 100)};
    SlicingParams params;
    params.m_min = 2;
    EXPECT_EQ(detect_boundaries(base, 2, params).slices.size(), 1u);
    params.m_min = 1;
    EXPECT_EQ(detect_boundaries(base, 2, params).slices.size(), 2u);
}

TEST(DetectBoundaries, MaxDurationForcesCut) {
    std::vector<BaseSlice> base;
    for (int d = 0; d < 10; ++d) {
        base.push_back(window(kT0 + d * kDay, 50, {10}, static_cast<std::size_t>(d) * 50));
    }
    SlicingParams params;
    params.max_duration = 3 * kDay;
    auto r = detect_boundaries(base, 1, params);
    ASSERT_GT(r.slices.size(), 1u);
    for (const auto& s : r.slices) {
        EXPECT_LE(s.end - s.start, 3 * kDay);
        EXPECT_FALSE(s.anomalous_boundary);
    }
}

TEST(DetectBoundaries, SparseWindowsMerge) {
    std::vector<BaseSlice> base = {window(kT0, 1, {1}, 0), window(kT0 + kDay, 30, {3}, 1),
                                   window(kT0 + 2 * kDay, 0, {0}, 31), window(kT0 + 3 * kDay, 30, {3}, 31),
                                   window(kT0 + 4 * kDay, 1, {0}, 61)};
    auto merged = merge_sparse(base);
    ASSERT_EQ(merged.size(), 2u);
    EXPECT_EQ(merged[0].n(), 31u);
    EXPECT_EQ(merged[1].n(), 31u);
    EXPECT_EQ(merged[1].end, kT0 + 5 * kDay);
    for (const auto& w : merged) {
        EXPECT_GE(w.n(), 2u);
    }
}

// Slices partition the documents and the timeline; reversing time yields the
// same boundary set because the test statistic is antisymmetric.
TEST(DetectBoundaries, PartitionAndReversal) {
    synthetic::BurstSpec spec;
    spec.stream.days = 30;
    spec.stream.docs_per_day = 60;
    auto fixture = synthetic::burst_corpus(5, spec);
    auto corpus = TokenizedCorpus::build(fixture.documents, Tokenizer());
    std::vector<std::string> concepts = fixture.background_tokens;
    concepts.push_back("xburst");
    auto base = uniform_slices(corpus, kDay, concepts);
    auto r = detect_boundaries(base, concepts.size());

    std::vector<std::size_t> seen;
    for (std::size_t s = 0; s < r.slices.size(); ++s) {
        if (s > 0) {
            EXPECT_EQ(r.slices[s].start, r.slices[s - 1].end);
        }
        seen.insert(seen.end(), r.slices[s].docs.begin(), r.slices[s].docs.end());
    }
    std::sort(seen.begin(), seen.end());
    ASSERT_EQ(seen.size(), corpus.size());
    for (std::size_t i = 0; i < seen.size(); ++i) {
        EXPECT_EQ(seen[i], i);
    }

    std::vector<BaseSlice> reversed(base.rbegin(), base.rend());
    for (std::size_t i = 0; i < reversed.size(); ++i) {
        reversed[i].start = kT0 + static_cast<Timestamp>(i) * kDay;
        reversed[i].end = reversed[i].start + kDay;
    }
    auto rr = detect_boundaries(reversed, concepts.size());
    const auto n = base.size();
    std::vector<bool> forward(n, false), backward(n, false);
    for (const auto& b : r.boundaries) {
        forward[static_cast<std::size_t>((b.at - kT0) / kDay)] = b.mutated_count > 0;
    }
    for (const auto& b : rr.boundaries) {
        backward[n - static_cast<std::size_t>((b.at - kT0) / kDay)] = b.mutated_count > 0;
    }
    EXPECT_EQ(forward, backward);
}
