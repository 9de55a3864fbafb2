#include "conceptflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "conceptflow/error.hpp"

namespace conceptflow {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        auto start = line.find_first_not_of(" \t\r", pos);
        if (start == std::string_view::npos) {
            break;
        }
        auto end = line.find_first_of(" \t\r", start);
        if (end == std::string_view::npos) {
            end = line.size();
        }
        fields.push_back(line.substr(start, end - start));
        pos = end;
    }
    return fields;
}

bool is_unsigned_integer(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

double parse_real(std::string_view s, std::size_t line_no) {
    std::string copy(s);
    char* end = nullptr;
    double v = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size() || !std::isfinite(v)) {
        throw Error("features", "line " + std::to_string(line_no) + ": bad value '" + copy + "'");
    }
    return v;
}

}  // namespace

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
    auto it = vectors.find(std::string(token));
    return it == vectors.end() ? nullptr : &it->second;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("features", "cannot read embedding file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_embeddings(buffer.str());
}

EmbeddingTable parse_embeddings(std::string_view contents) {
    EmbeddingTable table;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool first = true;
    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string_view::npos) {
            end = contents.size();
        }
        std::string_view line = contents.substr(start, end - start);
        start = end + 1;
        ++line_no;
        auto fields = split_fields(line);
        if (fields.empty()) {
            continue;
        }
        if (first) {
            first = false;
            if (fields.size() == 2 && is_unsigned_integer(fields[0]) && is_unsigned_integer(fields[1])) {
                table.dim = std::stoul(std::string(fields[1]));
                if (table.dim == 0) {
                    throw Error("features", "line 1: embedding dimension must be positive");
                }
                continue;
            }
            if (fields.size() < 2) {
                throw Error("features", "line 1: no vector values");
            }
            table.dim = fields.size() - 1;
        }
        if (fields.size() - 1 != table.dim) {
            throw Error("features", "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.dim) + " values, found " +
                                        std::to_string(fields.size() - 1));
        }
        std::string token(fields[0]);
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        std::vector<double> values;
        values.reserve(table.dim);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            values.push_back(parse_real(fields[i], line_no));
        }
        auto [it, inserted] = table.vectors.try_emplace(token, values);
        if (!inserted) {
            table.warnings.push_back("line " + std::to_string(line_no) + ": duplicate token '" +
                                     token + "', later vector kept");
            it->second = std::move(values);
        }
    }
    return table;
}

OccurrenceMatrix::OccurrenceMatrix(std::size_t cols, std::vector<std::vector<std::size_t>> rows)
    : cols_(cols), rows_(std::move(rows)) {
    for (auto& row : rows_) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        if (!row.empty() && row.back() >= cols_) {
            throw Error("features", "occurrence column out of range");
        }
    }
}

bool OccurrenceMatrix::at(std::size_t row, std::size_t col) const {
    const auto& r = rows_.at(row);
    return std::binary_search(r.begin(), r.end(), col);
}

std::size_t OccurrenceMatrix::hamming(std::size_t a, std::size_t b) const {
    const auto& ra = rows_.at(a);
    const auto& rb = rows_.at(b);
    std::size_t common = 0;
    auto ia = ra.begin();
    auto ib = rb.begin();
    while (ia != ra.end() && ib != rb.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    return ra.size() + rb.size() - 2 * common;
}

OccurrenceMatrix build_occurrence(std::span<const std::size_t> slice_docs,
                                  std::span<const std::string> concepts,
                                  const TokenizedCorpus& corpus) {
    std::vector<std::vector<std::size_t>> rows(concepts.size());
    for (std::size_t n = 0; n < slice_docs.size(); ++n) {
        if (slice_docs[n] >= corpus.size()) {
            throw Error("features", "slice references document " + std::to_string(slice_docs[n]) +
                                        " outside the corpus");
        }
        for (std::size_t m = 0; m < concepts.size(); ++m) {
            if (corpus.contains(slice_docs[n], concepts[m])) {
                rows[m].push_back(n);
            }
        }
    }
    return OccurrenceMatrix(slice_docs.size(), std::move(rows));
}

OccurrenceMatrix build_occurrence_by_id(std::span<const std::string> doc_ids,
                                        std::span<const std::string> concepts,
                                        const TokenizedCorpus& corpus) {
    std::vector<std::size_t> indices;
    indices.reserve(doc_ids.size());
    for (const auto& id : doc_ids) {
        auto idx = corpus.find(id);
        if (idx == TokenizedCorpus::npos) {
            throw Error("features", "slice references unknown document id '" + id + "'");
        }
        indices.push_back(idx);
    }
    return build_occurrence(indices, concepts, corpus);
}

ConceptFeatureMatrix::ConceptFeatureMatrix(std::vector<std::vector<double>> embedding_block,
                                           OccurrenceMatrix occurrence, double alpha_feat)
    : embedding_(std::move(embedding_block)), occurrence_(std::move(occurrence)), alpha_feat_(alpha_feat) {
    if (embedding_.size() != occurrence_.rows()) {
        throw Error("features", "embedding block and occurrence matrix disagree on concept count");
    }
    dim_ = embedding_.empty() ? 0 : embedding_.front().size();
    for (const auto& row : embedding_) {
        if (row.size() != dim_) {
            throw Error("features", "ragged embedding block");
        }
    }
}

std::vector<double> ConceptFeatureMatrix::row(std::size_t m) const {
    std::vector<double> out(embedding_.at(m));
    out.resize(cols(), 0.0);
    for (auto col : occurrence_.row(m)) {
        out[dim_ + col] = alpha_feat_;
    }
    return out;
}

double ConceptFeatureMatrix::squared_norm(std::size_t m) const {
    double sum = 0.0;
    for (double v : embedding_.at(m)) {
        sum += v * v;
    }
    return sum + alpha_feat_ * alpha_feat_ * static_cast<double>(occurrence_.row_count(m));
}

double ConceptFeatureMatrix::squared_distance(std::size_t a, std::size_t b) const {
    const auto& ea = embedding_.at(a);
    const auto& eb = embedding_.at(b);
    double sum = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double d = ea[i] - eb[i];
        sum += d * d;
    }
    return sum + alpha_feat_ * alpha_feat_ * static_cast<double>(occurrence_.hamming(a, b));
}

ConceptFeatureMatrix ConceptFeatureMatrix::select(std::span<const std::size_t> keep) const {
    std::vector<std::vector<double>> emb;
    std::vector<std::vector<std::size_t>> rows;
    emb.reserve(keep.size());
    rows.reserve(keep.size());
    for (auto k : keep) {
        emb.push_back(embedding_.at(k));
        auto r = occurrence_.row(k);
        rows.emplace_back(r.begin(), r.end());
    }
    ConceptFeatureMatrix out(std::move(emb), OccurrenceMatrix(occurrence_.cols(), std::move(rows)),
                             alpha_feat_);
    out.dim_ = dim_;
    return out;
}

ConceptFeatureMatrix build_features(const EmbeddingTable& table, std::span<const std::string> concepts,
                                    OccurrenceMatrix occurrence, double alpha_feat) {
    if (!(alpha_feat >= 0.0 && alpha_feat <= 1.0)) {
        throw Error("features", "alpha_feat must lie in [0, 1]");
    }
    if (concepts.size() != occurrence.rows()) {
        throw Error("features", "concept list and occurrence matrix disagree on concept count");
    }
    std::vector<std::vector<double>> block;
    block.reserve(concepts.size());
    for (const auto& token : concepts) {
        std::vector<double> row(table.dim, 0.0);
        if (const auto* vec = table.find(token)) {
            double norm = 0.0;
            for (double v : *vec) {
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (std::size_t i = 0; i < table.dim; ++i) {
                    row[i] = (*vec)[i] / norm;
                }
            }
        }
        block.push_back(std::move(row));
    }
    ConceptFeatureMatrix g(std::move(block), std::move(occurrence), alpha_feat);
    return g;
}

}  // namespace conceptflow
