#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace conceptflow {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

constexpr Timestamp kSecondsPerDay = 86400;

/// Parses "YYYY-MM-DDTHH:MM:SS" followed by "Z" or a "+HH:MM"/"-HH:MM"
/// offset. Fractional seconds are accepted and truncated. Throws Error.
Timestamp parse_timestamp(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp ts);

struct Document {
    std::string id;
    Timestamp timestamp = 0;
    std::string text;
    std::string group;
    std::string topic;

    bool operator==(const Document&) const = default;
};

struct Concept {
    std::string token;
    std::string topic;
    std::size_t corpus_doc_freq = 0;

    bool operator==(const Concept&) const = default;
};

struct RejectedLine {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct LoadResult {
    std::vector<Document> documents;  // ascending by timestamp
    std::vector<RejectedLine> rejected;
};

/// Loads a JSON-lines corpus. Blank lines are ignored. Malformed records are
/// skipped and reported unless they exceed 10% of the non-blank lines, in
/// which case loading fails with the offending line numbers. Duplicate ids
/// and unreadable files are fatal.
LoadResult load_corpus(const std::filesystem::path& path);

/// Same as load_corpus, over an in-memory stream of lines.
LoadResult parse_corpus(std::string_view contents);

/// One JSON-lines record for `doc` (no trailing newline).
std::string serialize_document(const Document& doc);

/// Lowercasing tokenizer with URL, @mention, punctuation and stopword removal.
/// Hashtags keep their text without the '#'.
class Tokenizer {
public:
    /// Uses the built-in English stopword list.
    Tokenizer();
    explicit Tokenizer(std::unordered_set<std::string> stopwords);

    /// Stopwords from a plain-text file, one token per line ('#' lines are
    /// comments).
    static Tokenizer from_file(const std::filesystem::path& path);

    std::vector<std::string> tokenize(std::string_view text) const;

    /// Sorted, de-duplicated tokens of `text`.
    std::vector<std::string> token_set(std::string_view text) const;

    bool is_stopword(std::string_view token) const;

    const std::unordered_set<std::string>& stopwords() const { return stopwords_; }

private:
    std::unordered_set<std::string> stopwords_;
};

std::vector<std::string> default_stopwords();

/// Tokenizes with the default stopword list.
std::vector<std::string> tokenize(std::string_view text);

/// Documents plus their sorted token sets, computed once and shared by the
/// later stages.
struct TokenizedCorpus {
    std::vector<Document> documents;               // ascending by timestamp
    std::vector<std::vector<std::string>> tokens;  // sorted unique, parallel to documents
    std::unordered_map<std::string, std::size_t> index;  // id -> position

    static TokenizedCorpus build(std::vector<Document> docs, const Tokenizer& tokenizer);

    std::size_t size() const { return documents.size(); }
    bool contains(std::size_t doc, std::string_view token) const;
    /// Index of the document with the given id, or npos.
    std::size_t find(std::string_view id) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Documents whose topic equals `topic`, in the original order. An empty
/// `topic` selects every document.
std::vector<Document> filter_topic(std::span<const Document> docs, std::string_view topic);

/// Top-K concepts of `topic` ranked by document frequency, ties broken by
/// token ascending.
std::vector<Concept> extract_concepts(std::span<const Document> docs, std::string_view topic,
                                      std::size_t k, const Tokenizer& tokenizer = Tokenizer());

}  // namespace conceptflow
