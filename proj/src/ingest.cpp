#include "conceptflow/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "conceptflow/error.hpp"

namespace conceptflow {

namespace {

using json = nlohmann::json;

int parse_digits(std::string_view text, std::size_t pos, std::size_t count) {
    if (pos + count > text.size()) {
        throw Error("ingest", "truncated timestamp '" + std::string(text) + "'");
    }
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') {
            throw Error("ingest", "bad timestamp '" + std::string(text) + "'");
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw Error("ingest", "bad timestamp '" + std::string(text) + "'");
    }
}

// Decodes one UTF-8 sequence starting at `pos`; invalid bytes decode as
// themselves so the tokenizer never drops input silently.
char32_t decode_utf8(std::string_view s, std::size_t& pos) {
    auto b0 = static_cast<unsigned char>(s[pos]);
    int extra = 0;
    char32_t cp = b0;
    if (b0 >= 0xF0 && b0 < 0xF8) {
        extra = 3;
        cp = b0 & 0x07;
    } else if (b0 >= 0xE0 && b0 < 0xF0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if (b0 >= 0xC0 && b0 < 0xE0) {
        extra = 1;
        cp = b0 & 0x1F;
    }
    for (int i = 1; i <= extra; ++i) {
        if (pos + i >= s.size() || (static_cast<unsigned char>(s[pos + i]) & 0xC0) != 0x80) {
            ++pos;
            return b0;
        }
        cp = (cp << 6) | (static_cast<unsigned char>(s[pos + i]) & 0x3F);
    }
    pos += 1 + extra;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_space(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' ||
           cp == U'\f' || cp == 0x00A0 || cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200B) ||
           cp == 0x2028 || cp == 0x2029 || cp == 0x202F || cp == 0x205F || cp == 0x3000 ||
           cp == 0xFEFF;
}

bool is_punct(char32_t cp) {
    if (cp < 0x80) {
        return !((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') ||
                 (cp >= U'0' && cp <= U'9'));
    }
    return (cp >= 0x00A1 && cp <= 0x00BF) || cp == 0x00D7 || cp == 0x00F7 ||
           (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
           (cp >= 0x3001 && cp <= 0x303F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
           (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
           (cp >= 0xFF5B && cp <= 0xFF65) || (cp >= 0x1F000 && cp <= 0x1FAFF) ||
           (cp >= 0x2600 && cp <= 0x27BF) || cp == 0xFE0F;
}

char32_t fold_case(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') {
        return cp + 32;
    }
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) {
        return cp + 32;
    }
    return cp;
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

bool is_url(std::string_view chunk) {
    return starts_with(chunk, "http://") || starts_with(chunk, "https://") ||
           starts_with(chunk, "www.") || chunk.find("://") != std::string_view::npos;
}

const char* const kEnglishStopwords[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
    "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "should", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren",
    "couldn", "didn", "doesn", "hadn", "hasn", "haven", "isn", "ma", "mightn", "mustn",
    "needn", "shan", "shouldn", "wasn", "weren", "won", "wouldn", "rt", "amp", "via",
};

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    int y = parse_digits(text, 0, 4);
    expect_char(text, 4, '-');
    int mo = parse_digits(text, 5, 2);
    expect_char(text, 7, '-');
    int d = parse_digits(text, 8, 2);
    if (text.size() <= 10 || (text[10] != 'T' && text[10] != ' ')) {
        throw Error("ingest", "bad timestamp '" + std::string(text) + "'");
    }
    int h = parse_digits(text, 11, 2);
    expect_char(text, 13, ':');
    int mi = parse_digits(text, 14, 2);
    expect_char(text, 16, ':');
    int s = parse_digits(text, 17, 2);
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            ++pos;
        }
    }
    long offset = 0;
    if (pos < text.size() && text[pos] == 'Z') {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        int sign = text[pos] == '-' ? -1 : 1;
        int oh = parse_digits(text, pos + 1, 2);
        expect_char(text, pos + 3, ':');
        int om = parse_digits(text, pos + 4, 2);
        offset = sign * (oh * 3600L + om * 60L);
        pos += 6;
    } else {
        throw Error("ingest", "timestamp '" + std::string(text) + "' lacks a UTC designator");
    }
    if (pos != text.size()) {
        throw Error("ingest", "trailing characters in timestamp '" + std::string(text) + "'");
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        throw Error("ingest", "timestamp out of range '" + std::string(text) + "'");
    }
    auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * kSecondsPerDay + h * 3600L + mi * 60L + s - offset;
}

std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    Timestamp days = ts >= 0 ? ts / kSecondsPerDay : -((-ts + kSecondsPerDay - 1) / kSecondsPerDay);
    Timestamp rem = ts - days * kSecondsPerDay;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

LoadResult load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("ingest", "cannot read corpus file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw Error("ingest", "error reading corpus file " + path.string());
    }
    return parse_corpus(buffer.str());
}

LoadResult parse_corpus(std::string_view contents) {
    LoadResult result;
    std::size_t non_blank = 0;
    std::size_t line_no = 0;
    std::size_t start = 0;
    std::map<std::string, std::size_t> seen_ids;

    while (start < contents.size()) {
        auto end = contents.find('\n', start);
        if (end == std::string_view::npos) {
            end = contents.size();
        }
        std::string_view line = contents.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            continue;
        }
        ++non_blank;

        auto reject = [&](std::string reason) {
            result.rejected.push_back({line_no, std::move(reason)});
        };
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            reject("not a JSON object");
            continue;
        }
        Document doc;
        bool ok = true;
        for (const char* key : {"id", "timestamp", "text", "group", "topic"}) {
            auto it = record.find(key);
            if (it == record.end() || !it->is_string()) {
                reject(std::string("missing or non-string field '") + key + "'");
                ok = false;
                break;
            }
        }
        if (!ok) {
            continue;
        }
        doc.id = record["id"].get<std::string>();
        doc.text = record["text"].get<std::string>();
        doc.group = record["group"].get<std::string>();
        doc.topic = record["topic"].get<std::string>();
        if (doc.topic.empty()) {
            reject("empty topic");
            continue;
        }
        try {
            doc.timestamp = parse_timestamp(record["timestamp"].get<std::string>());
        } catch (const Error& e) {
            reject(e.what());
            continue;
        }
        auto [it, inserted] = seen_ids.emplace(doc.id, line_no);
        if (!inserted) {
            throw Error("ingest", "duplicate document id '" + doc.id + "' on lines " +
                                      std::to_string(it->second) + " and " +
                                      std::to_string(line_no));
        }
        result.documents.push_back(std::move(doc));
    }

    if (!result.rejected.empty() && result.rejected.size() * 10 > non_blank) {
        std::string msg = std::to_string(result.rejected.size()) + " of " +
                          std::to_string(non_blank) + " lines malformed";
        for (const auto& r : result.rejected) {
            msg += "; line " + std::to_string(r.line) + ": " + r.reason;
        }
        throw Error("ingest", msg);
    }
    std::stable_sort(result.documents.begin(), result.documents.end(),
                     [](const Document& a, const Document& b) { return a.timestamp < b.timestamp; });
    return result;
}

std::string serialize_document(const Document& doc) {
    json record = {{"id", doc.id},
                   {"timestamp", format_timestamp(doc.timestamp)},
                   {"text", doc.text},
                   {"group", doc.group},
                   {"topic", doc.topic}};
    return record.dump();
}

std::vector<std::string> default_stopwords() {
    return {std::begin(kEnglishStopwords), std::end(kEnglishStopwords)};
}

Tokenizer::Tokenizer() {
    for (const char* w : kEnglishStopwords) {
        stopwords_.insert(w);
    }
}

Tokenizer::Tokenizer(std::unordered_set<std::string> stopwords)
    : stopwords_(std::move(stopwords)) {}

Tokenizer Tokenizer::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("ingest", "cannot read stopword file " + path.string());
    }
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        auto last = line.find_last_not_of(" \t\r");
        std::string word = line.substr(first, last - first + 1);
        std::transform(word.begin(), word.end(), word.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        words.insert(std::move(word));
    }
    return Tokenizer(std::move(words));
}

bool Tokenizer::is_stopword(std::string_view token) const {
    return stopwords_.contains(std::string(token));
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> out;

    auto emit = [&](std::string& piece, std::size_t codepoints) {
        if (codepoints >= 2 && !starts_with(piece, "http") &&
            !std::all_of(piece.begin(), piece.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
            !is_stopword(piece)) {
            out.push_back(piece);
        }
        piece.clear();
    };

    // Whitespace-delimited chunks, each folded to lowercase codepoints.
    std::size_t pos = 0;
    std::vector<char32_t> chunk;
    auto flush_chunk = [&] {
        if (chunk.empty()) {
            return;
        }
        std::size_t begin = 0;
        while (begin < chunk.size() && is_punct(chunk[begin]) && chunk[begin] != U'@' &&
               chunk[begin] != U'#') {
            ++begin;
        }
        std::string raw;
        for (std::size_t i = begin; i < chunk.size(); ++i) {
            append_utf8(raw, chunk[i]);
        }
        if (begin < chunk.size() && chunk[begin] == U'@') {
            chunk.clear();
            return;
        }
        if (is_url(raw)) {
            chunk.clear();
            return;
        }
        std::string piece;
        std::size_t codepoints = 0;
        for (std::size_t i = begin; i < chunk.size(); ++i) {
            if (is_punct(chunk[i])) {
                emit(piece, codepoints);
                codepoints = 0;
            } else {
                append_utf8(piece, chunk[i]);
                ++codepoints;
            }
        }
        emit(piece, codepoints);
        chunk.clear();
    };
    while (pos < text.size()) {
        char32_t cp = decode_utf8(text, pos);
        if (is_space(cp)) {
            flush_chunk();
        } else {
            chunk.push_back(fold_case(cp));
        }
    }
    flush_chunk();
    return out;
}

std::vector<std::string> Tokenizer::token_set(std::string_view text) const {
    auto tokens = tokenize(text);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

std::vector<std::string> tokenize(std::string_view text) {
    static const Tokenizer tokenizer;
    return tokenizer.tokenize(text);
}

TokenizedCorpus TokenizedCorpus::build(std::vector<Document> docs, const Tokenizer& tokenizer) {
    TokenizedCorpus corpus;
    std::stable_sort(docs.begin(), docs.end(),
                     [](const Document& a, const Document& b) { return a.timestamp < b.timestamp; });
    corpus.tokens.reserve(docs.size());
    for (const auto& doc : docs) {
        corpus.tokens.push_back(tokenizer.token_set(doc.text));
    }
    corpus.documents = std::move(docs);
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        corpus.index.emplace(corpus.documents[i].id, i);
    }
    return corpus;
}

bool TokenizedCorpus::contains(std::size_t doc, std::string_view token) const {
    const auto& set = tokens.at(doc);
    return std::binary_search(set.begin(), set.end(), token,
                              [](std::string_view a, std::string_view b) { return a < b; });
}

std::size_t TokenizedCorpus::find(std::string_view id) const {
    auto it = index.find(std::string(id));
    return it == index.end() ? npos : it->second;
}

std::vector<Document> filter_topic(std::span<const Document> docs, std::string_view topic) {
    std::vector<Document> out;
    for (const auto& doc : docs) {
        if (topic.empty() || doc.topic == topic) {
            out.push_back(doc);
        }
    }
    return out;
}

std::vector<Concept> extract_concepts(std::span<const Document> docs, std::string_view topic,
                                      std::size_t k, const Tokenizer& tokenizer) {
    if (k == 0) {
        throw Error("ingest", "concept count K must be at least 1");
    }
    std::map<std::string, std::size_t> doc_freq;
    for (const auto& doc : docs) {
        if (!topic.empty() && doc.topic != topic) {
            continue;
        }
        for (auto& token : tokenizer.token_set(doc.text)) {
            ++doc_freq[std::move(token)];
        }
    }
    std::vector<Concept> ranked;
    ranked.reserve(doc_freq.size());
    for (auto& [token, freq] : doc_freq) {
        ranked.push_back({token, std::string(topic), freq});
    }
    // doc_freq iterates in token order, so a stable sort keeps ties lexicographic.
    std::stable_sort(ranked.begin(), ranked.end(), [](const Concept& a, const Concept& b) {
        return a.corpus_doc_freq > b.corpus_doc_freq;
    });
    if (ranked.size() > k) {
        ranked.resize(k);
    }
    return ranked;
}

}  // namespace conceptflow
