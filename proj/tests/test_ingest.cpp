#include <random>
#include <set>

#include <gtest/gtest.h>

#include "conceptflow/error.hpp"
#include "conceptflow/ingest.hpp"

using namespace conceptflow;

namespace {

std::string record(const std::string& id, const std::string& ts, const std::string& text,
                   const std::string& topic = "t") {
    return R"({"id":")" + id + R"(","timestamp":")" + ts + R"(","text":")" + text + R"(","group":"g","topic":")" +
           topic + "\"}";
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Timestamp, ParsesZuluAndOffsets) {
    EXPECT_EQ(parse_timestamp("1970-01-01T00:00:00Z"), 0);
    EXPECT_EQ(parse_timestamp("2013-01-01T00:00:00Z"), 1356998400);
    EXPECT_EQ(parse_timestamp("2013-01-01T08:00:00+08:00"), 1356998400);
    EXPECT_EQ(parse_timestamp("2012-12-31T19:00:00-05:00"), 1356998400);
    EXPECT_EQ(parse_timestamp("2013-01-01T00:00:00.750Z"), 1356998400);
    EXPECT_EQ(format_timestamp(1356998400), "2013-01-01T00:00:00Z");
    EXPECT_THROW(parse_timestamp("2013-01-01"), Error);
    EXPECT_THROW(parse_timestamp("2013-13-01T00:00:00Z"), Error);
}

TEST(LoadCorpus, EmptyInput) {
    auto r = parse_corpus("");
    EXPECT_TRUE(r.documents.empty());
    EXPECT_TRUE(r.rejected.empty());
}

TEST(LoadCorpus, SortsByTimestamp) {
    const std::string text = record("c", "2013-01-03T00:00:00Z", "three") + "\n" +
                             record("a", "2013-01-01T00:00:00Z", "one") + "\n\n" +
                             record("b", "2013-01-02T00:00:00Z", "two") + "\n";
    auto r = parse_corpus(text);
    ASSERT_EQ(r.documents.size(), 3u);
    EXPECT_EQ(r.documents[0].id, "a");
    EXPECT_EQ(r.documents[1].id, "b");
    EXPECT_EQ(r.documents[2].id, "c");
    EXPECT_TRUE(r.rejected.empty());
}

TEST(LoadCorpus, MissingTopicListsLine) {
    const std::string line = R"({"id":"a","timestamp":"2013-01-01T00:00:00Z","text":"x","group":"g"})";
    try {
        parse_corpus(line + "\n");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
    }
}

TEST(LoadCorpus, FewMalformedLinesAreSkipped) {
    std::string text;
    for (int i = 0; i < 20; ++i) {
        text += record("d" + std::to_string(i), "2013-01-01T00:00:00Z", "x") + "\n";
    }
    text += "not json\n";
    auto r = parse_corpus(text);
    EXPECT_EQ(r.documents.size(), 20u);
    ASSERT_EQ(r.rejected.size(), 1u);
    EXPECT_EQ(r.rejected[0].line, 21u);
}

TEST(LoadCorpus, DuplicateIdIsFatal) {
    const std::string text = record("a", "2013-01-01T00:00:00Z", "x") + "\n" +
                             record("a", "2013-01-02T00:00:00Z", "y") + "\n";
    EXPECT_THROW(parse_corpus(text), Error);
}

TEST(LoadCorpus, SerializeRoundTrip) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> ch(0x20, 0x7e);
    std::uniform_int_distribution<Timestamp> ts(0, 2'000'000'000);
    std::vector<Document> docs;
    std::string text;
    for (int i = 0; i < 200; ++i) {
        Document d;
        d.id = "id" + std::to_string(i);
        d.timestamp = ts(rng);
        for (int k = 0; k < 30; ++k) {
            d.text += static_cast<char>(ch(rng));
        }
        d.text += "\xC3\xA9\t\"\\";
        d.group = i % 2 ? "dem" : "rep";
        d.topic = "topic" + std::to_string(i % 3);
        docs.push_back(d);
        text += serialize_document(d) + "\n";
    }
    auto r = parse_corpus(text);
    std::stable_sort(docs.begin(), docs.end(),
                     [](const Document& a, const Document& b) { return a.timestamp < b.timestamp; });
    EXPECT_EQ(r.documents, docs);
}

TEST(Tokenize, Examples) {
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(as_set(tokenize("No Budget No Pay! https://t.co/x")), (std::set<std::string>{"budget", "pay"}));
    EXPECT_EQ(as_set(tokenize("Senate passed the budget")), (std::set<std::string>{"senate", "passed", "budget"}));
}

TEST(Tokenize, MentionsHashtagsNumbers) {
    EXPECT_EQ(tokenize("@BarackObama signs #FiscalCliff deal 2013"),
              (std::vector<std::string>{"signs", "fiscalcliff", "deal"}));
    EXPECT_EQ(tokenize("RT via www.example.com: Congress, votes."),
              (std::vector<std::string>{"congress", "votes"}));
}

TEST(Tokenize, Idempotent) {
    const std::vector<std::string> samples = {
        "Senate passed the budget", "No Budget No Pay! https://t.co/x", "Ünïcode café, naïve résumé!",
        "#Hashtag @mention x y zz 42 a1b2", "Happy holidays!!! Watch this video: http://youtu.be/q"};
    for (const auto& s : samples) {
        auto once = tokenize(s);
        std::string joined;
        for (const auto& t : once) {
            joined += t + " ";
        }
        EXPECT_EQ(tokenize(joined), once) << s;
    }
}

TEST(Tokenize, CustomStopwords) {
    Tokenizer tok(std::unordered_set<std::string>{"senate"});
    EXPECT_EQ(tok.tokenize("Senate passed the budget"), (std::vector<std::string>{"passed", "the", "budget"}));
}

TEST(ExtractConcepts, Examples) {
    EXPECT_TRUE(extract_concepts({}, "t", 10).empty());

    std::vector<Document> docs = {{"d1", 0, "alpha beta", "g", "t"}, {"d2", 1, "alpha gamma", "g", "t"}};
    auto top = extract_concepts(docs, "t", 1);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_EQ(top[0].token, "alpha");
    EXPECT_EQ(top[0].corpus_doc_freq, 2u);

    std::vector<Document> tied = {{"d1", 0, "alpha beta", "g", "t"}, {"d2", 1, "beta alpha", "g", "t"}};
    auto both = extract_concepts(tied, "t", 2);
    ASSERT_EQ(both.size(), 2u);
    EXPECT_EQ(both[0].token, "alpha");
    EXPECT_EQ(both[1].token, "beta");

    EXPECT_THROW(extract_concepts(docs, "t", 0), Error);
}

TEST(ExtractConcepts, MatchesBruteForceCount) {
    std::mt19937_64 rng(11);
    const std::vector<std::string> vocab = {"apple", "banana", "cherry", "delta", "echo", "foxtrot", "golf"};
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::vector<Document> docs;
    for (int i = 0; i < 300; ++i) {
        std::string text;
        for (int k = 0; k < 4; ++k) {
            text += vocab[pick(rng)] + " ";
        }
        docs.push_back({"d" + std::to_string(i), i, text, "g", i % 5 == 0 ? "other" : "t"});
    }
    std::map<std::string, std::size_t> df;
    for (const auto& d : docs) {
        if (d.topic != "t") {
            continue;
        }
        std::set<std::string> seen;
        for (const auto& v : vocab) {
            if (d.text.find(v) != std::string::npos) {
                seen.insert(v);
            }
        }
        for (const auto& v : seen) {
            ++df[v];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> expected(df.begin(), df.end());
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    auto got = extract_concepts(docs, "t", 5);
    ASSERT_EQ(got.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(got[i].token, expected[i].first);
        EXPECT_EQ(got[i].corpus_doc_freq, expected[i].second);
        EXPECT_EQ(got[i].topic, "t");
    }
}

TEST(TokenizedCorpus, BuildAndLookup) {
    std::vector<Document> docs = {{"b", 5, "senate vote", "g", "t"}, {"a", 1, "budget", "g", "t"}};
    auto c = TokenizedCorpus::build(docs, Tokenizer());
    EXPECT_EQ(c.size(), 2u);
    EXPECT_EQ(c.find("b"), 1u);
    EXPECT_EQ(c.find("zzz"), TokenizedCorpus::npos);
    EXPECT_TRUE(c.contains(1, "vote"));
    EXPECT_FALSE(c.contains(0, "vote"));
}
