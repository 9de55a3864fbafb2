#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conceptflow/ingest.hpp"

namespace conceptflow {

struct EmbeddingTable {
    std::size_t dim = 0;
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::vector<std::string> warnings;

    const std::vector<double>* find(std::string_view token) const;
};

/// Reads the text vector format: an optional "COUNT DIM" header, then one
/// "token v1 ... vDIM" line per token. Without a header the dimension is the
/// value count of the first line. Tokens are lowercased; a repeated token
/// replaces the earlier vector and records a warning.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::string_view contents);

/// Binary concept-by-document matrix stored row-wise as sorted column lists.
class OccurrenceMatrix {
public:
    OccurrenceMatrix() = default;
    OccurrenceMatrix(std::size_t cols, std::vector<std::vector<std::size_t>> rows);

    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_; }
    bool at(std::size_t row, std::size_t col) const;
    std::span<const std::size_t> row(std::size_t r) const { return rows_.at(r); }
    /// Number of documents containing concept `r`.
    std::size_t row_count(std::size_t r) const { return rows_.at(r).size(); }
    /// |row a XOR row b|, the squared Euclidean distance between two binary rows.
    std::size_t hamming(std::size_t a, std::size_t b) const;

private:
    std::size_t cols_ = 0;
    std::vector<std::vector<std::size_t>> rows_;
};

/// F[m][n] = 1 iff concept m occurs in document `slice_docs[n]`.
/// `slice_docs` are indices into `corpus`.
OccurrenceMatrix build_occurrence(std::span<const std::size_t> slice_docs,
                                  std::span<const std::string> concepts,
                                  const TokenizedCorpus& corpus);

/// Same, resolving document ids; an unknown id is fatal.
OccurrenceMatrix build_occurrence_by_id(std::span<const std::string> doc_ids,
                                        std::span<const std::string> concepts,
                                        const TokenizedCorpus& corpus);

/// Rows G_m = [D_m | alpha_feat * F_m]. The embedding block is L2-normalised
/// per row; out-of-vocabulary concepts get a zero embedding block.
class ConceptFeatureMatrix {
public:
    ConceptFeatureMatrix() = default;
    ConceptFeatureMatrix(std::vector<std::vector<double>> embedding_block, OccurrenceMatrix occurrence,
                         double alpha_feat);

    std::size_t rows() const { return occurrence_.rows(); }
    /// dim + N_t
    std::size_t cols() const { return dim_ + occurrence_.cols(); }
    std::size_t embedding_dim() const { return dim_; }
    double alpha_feat() const { return alpha_feat_; }
    const OccurrenceMatrix& occurrence() const { return occurrence_; }
    std::span<const double> embedding(std::size_t row) const { return embedding_.at(row); }

    /// Dense copy of row m.
    std::vector<double> row(std::size_t m) const;
    double squared_norm(std::size_t m) const;
    /// Squared Euclidean distance between rows, using sparse arithmetic on
    /// the occurrence block.
    double squared_distance(std::size_t a, std::size_t b) const;
    /// Matrix with the given rows only, in the given order.
    ConceptFeatureMatrix select(std::span<const std::size_t> keep) const;

private:
    std::size_t dim_ = 0;
    std::vector<std::vector<double>> embedding_;
    OccurrenceMatrix occurrence_;
    double alpha_feat_ = 0.9;
};

constexpr double kDefaultAlphaFeat = 0.9;

ConceptFeatureMatrix build_features(const EmbeddingTable& table, std::span<const std::string> concepts,
                                    OccurrenceMatrix occurrence, double alpha_feat = kDefaultAlphaFeat);

}  // namespace conceptflow
