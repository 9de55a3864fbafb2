#include <random>

#include <gtest/gtest.h>

#include "conceptflow/error.hpp"
#include "conceptflow/features.hpp"

using namespace conceptflow;

TEST(Embeddings, WithHeader) {
    auto t = parse_embeddings("2 3\na 1 0 0\nb 0 1 0\n");
    EXPECT_EQ(t.dim, 3u);
    EXPECT_EQ(t.vectors.size(), 2u);
    ASSERT_NE(t.find("b"), nullptr);
    EXPECT_EQ(*t.find("b"), (std::vector<double>{0, 1, 0}));
    EXPECT_EQ(t.find("c"), nullptr);
}

TEST(Embeddings, InferredDimension) {
    auto t = parse_embeddings("Senate 0.5 -1.5 2 4\nbudget 1 1 1 1\n");
    EXPECT_EQ(t.dim, 4u);
    ASSERT_NE(t.find("senate"), nullptr);
    EXPECT_EQ(*t.find("senate"), (std::vector<double>{0.5, -1.5, 2, 4}));
}

TEST(Embeddings, DuplicateLastWins) {
    auto t = parse_embeddings("a 1 2\nb 3 4\na 5 6\n");
    EXPECT_EQ(*t.find("a"), (std::vector<double>{5, 6}));
    EXPECT_EQ(t.warnings.size(), 1u);
}

TEST(Embeddings, InconsistentLengthIsFatal) {
    EXPECT_THROW(parse_embeddings("a 1 2\nb 3 4 5\n"), Error);
    EXPECT_THROW(parse_embeddings("2 3\na 1 2\n"), Error);
}

TEST(Occurrence, RowsAndBinary) {
    std::vector<Document> docs = {{"1", 1, "alpha beta alpha alpha", "g", "t"},
                                  {"2", 2, "beta", "g", "t"},
                                  {"3", 3, "alpha", "g", "t"}};
    auto corpus = TokenizedCorpus::build(docs, Tokenizer());
    const std::vector<std::string> concepts = {"alpha", "gamma"};
    const std::vector<std::size_t> slice = {0, 1, 2};
    auto f = build_occurrence(slice, concepts, corpus);
    ASSERT_EQ(f.rows(), 2u);
    ASSERT_EQ(f.cols(), 3u);
    EXPECT_TRUE(f.at(0, 0));
    EXPECT_FALSE(f.at(0, 1));
    EXPECT_TRUE(f.at(0, 2));
    EXPECT_EQ(f.row_count(0), 2u);  // repeated token in doc 1 still counts once
    EXPECT_EQ(f.row_count(1), 0u);
    EXPECT_EQ(f.hamming(0, 1), 2u);

    const std::vector<std::string> ids = {"3", "1"};
    auto by_id = build_occurrence_by_id(ids, concepts, corpus);
    EXPECT_TRUE(by_id.at(0, 0));
    EXPECT_TRUE(by_id.at(0, 1));
    const std::vector<std::string> bad = {"9"};
    EXPECT_THROW(build_occurrence_by_id(bad, concepts, corpus), Error);
}

TEST(Features, AlphaSuffix) {
    EmbeddingTable table = parse_embeddings("a 3 4\n");
    OccurrenceMatrix f(3, {{0, 2}});
    const std::vector<std::string> concepts = {"a"};
    auto g = build_features(table, concepts, f, 0.9);
    auto row = g.row(0);
    ASSERT_EQ(row.size(), 5u);
    EXPECT_DOUBLE_EQ(row[0], 0.6);
    EXPECT_DOUBLE_EQ(row[1], 0.8);
    EXPECT_DOUBLE_EQ(row[2], 0.9);
    EXPECT_DOUBLE_EQ(row[3], 0.0);
    EXPECT_DOUBLE_EQ(row[4], 0.9);
}

TEST(Features, AlphaZeroPadsEmbedding) {
    EmbeddingTable table = parse_embeddings("a 1 0\nb 0 2\n");
    OccurrenceMatrix f(2, {{0}, {0, 1}});
    const std::vector<std::string> concepts = {"a", "b"};
    auto g = build_features(table, concepts, f, 0.0);
    EXPECT_EQ(g.row(0), (std::vector<double>{1, 0, 0, 0}));
    EXPECT_EQ(g.row(1), (std::vector<double>{0, 1, 0, 0}));
    EXPECT_THROW(build_features(table, concepts, f, 1.5), Error);
}

TEST(Features, OutOfVocabulary) {
    EmbeddingTable table = parse_embeddings("a 1 0\n");
    OccurrenceMatrix f(2, {{1}});
    const std::vector<std::string> concepts = {"zzz"};
    auto g = build_features(table, concepts, f, 0.9);
    EXPECT_EQ(g.row(0), (std::vector<double>{0, 0, 0, 0.9}));
}

// ||G_m||^2 = ||D_m||^2 + alpha^2 * |F_m|, and the sparse distance equals the
// dense one.
TEST(Features, NormAndDistanceIdentities) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    std::bernoulli_distribution coin(0.3);
    std::string text;
    const std::size_t m = 12, dim = 6, docs = 40;
    std::vector<std::string> concepts;
    for (std::size_t i = 0; i < m; ++i) {
        concepts.push_back("c" + std::to_string(i));
        if (i % 4 == 3) {
            continue;  // out of vocabulary
        }
        text += concepts.back();
        for (std::size_t d = 0; d < dim; ++d) {
            text += " " + std::to_string(n01(rng));
        }
        text += "\n";
    }
    std::vector<std::vector<std::size_t>> rows(m);
    for (auto& r : rows) {
        for (std::size_t d = 0; d < docs; ++d) {
            if (coin(rng)) {
                r.push_back(d);
            }
        }
    }
    const double alpha = 0.9;
    auto g = build_features(parse_embeddings(text), concepts, OccurrenceMatrix(docs, rows), alpha);
    for (std::size_t a = 0; a < m; ++a) {
        double emb = 0.0;
        for (double v : g.embedding(a)) {
            emb += v * v;
        }
        EXPECT_NEAR(emb, a % 4 == 3 ? 0.0 : 1.0, 1e-12);
        EXPECT_NEAR(g.squared_norm(a), emb + alpha * alpha * static_cast<double>(rows[a].size()), 1e-12);
        const auto ra = g.row(a);
        for (std::size_t b = 0; b < m; ++b) {
            const auto rb = g.row(b);
            double dense = 0.0;
            for (std::size_t k = 0; k < ra.size(); ++k) {
                dense += (ra[k] - rb[k]) * (ra[k] - rb[k]);
            }
            EXPECT_NEAR(g.squared_distance(a, b), dense, 1e-12);
        }
    }
    const std::vector<std::size_t> keep = {5, 1};
    auto sub = g.select(keep);
    EXPECT_EQ(sub.rows(), 2u);
    EXPECT_EQ(sub.row(0), g.row(5));
    EXPECT_NEAR(sub.squared_distance(0, 1), g.squared_distance(5, 1), 1e-15);
}
