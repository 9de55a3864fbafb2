#include "conceptflow/synthetic.hpp"

#include <cstdio>
#include <random>

#include "conceptflow/error.hpp"

namespace conceptflow::synthetic {

namespace {

Timestamp doc_time(std::size_t day, std::size_t i, std::size_t per_day) {
    return kEpoch + static_cast<Timestamp>(day) * kSecondsPerDay +
           static_cast<Timestamp>(i) * (kSecondsPerDay / static_cast<Timestamp>(per_day));
}

std::string doc_id(std::size_t day, std::size_t i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "d%03zu-%04zu", day, i);
    return buf;
}

// A document body built from the chosen tokens plus filler the tokenizer drops.
std::string compose(const std::vector<std::string>& tokens, std::size_t salt) {
    std::string text = salt % 3 == 0 ? "The " : "";
    for (const auto& t : tokens) {
        text += t;
        text += ' ';
    }
    if (salt % 4 == 1) {
        text += "https://t.co/x" + std::to_string(salt % 97);
    }
    return text;
}

std::vector<double> draw_rates(std::mt19937_64& rng, std::size_t count, double lo, double hi) {
    std::uniform_real_distribution<double> rate(lo, hi);
    std::vector<double> rates(count);
    for (auto& r : rates) {
        r = rate(rng);
    }
    return rates;
}

}  // namespace

std::string concept_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "term%02zu", index);
    return buf;
}

BurstCorpus burst_corpus(std::uint64_t seed, const BurstSpec& spec) {
    const auto& s = spec.stream;
    if (s.days < spec.burst_days + 10) {
        throw Error("synthetic", "stream too short for the burst");
    }
    std::mt19937_64 rng(seed);
    BurstCorpus out;
    for (std::size_t m = 0; m < s.background_concepts; ++m) {
        out.background_tokens.push_back(concept_name(m));
    }
    const auto rates = draw_rates(rng, s.background_concepts, s.min_rate, s.max_rate);
    std::size_t start_day = 0;
    if (spec.burst_start_day >= 0) {
        start_day = static_cast<std::size_t>(spec.burst_start_day);
    } else {
        std::uniform_int_distribution<std::size_t> pick(5, s.days - spec.burst_days - 5);
        start_day = pick(rng);
    }
    out.burst_start = kEpoch + static_cast<Timestamp>(start_day) * kSecondsPerDay;
    out.burst_end = out.burst_start + static_cast<Timestamp>(spec.burst_days) * kSecondsPerDay;

    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t day = 0; day < s.days; ++day) {
        const bool bursting = day >= start_day && day < start_day + spec.burst_days;
        for (std::size_t i = 0; i < s.docs_per_day; ++i) {
            std::vector<std::string> tokens;
            for (std::size_t m = 0; m < s.background_concepts; ++m) {
                if (u(rng) < rates[m]) {
                    tokens.push_back(out.background_tokens[m]);
                }
            }
            if (u(rng) < (bursting ? spec.burst_rate : spec.base_rate)) {
                tokens.push_back(spec.burst_token);
            }
            out.documents.push_back(
                {doc_id(day, i), doc_time(day, i, s.docs_per_day), compose(tokens, day * 7 + i), "g1", s.topic});
        }
    }
    return out;
}

std::vector<Document> stationary_corpus(std::uint64_t seed, const StreamSpec& spec) {
    std::mt19937_64 rng(seed);
    const auto rates = draw_rates(rng, spec.background_concepts, spec.min_rate, spec.max_rate);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Document> docs;
    docs.reserve(spec.days * spec.docs_per_day);
    for (std::size_t day = 0; day < spec.days; ++day) {
        for (std::size_t i = 0; i < spec.docs_per_day; ++i) {
            std::vector<std::string> tokens;
            for (std::size_t m = 0; m < spec.background_concepts; ++m) {
                if (u(rng) < rates[m]) {
                    tokens.push_back(concept_name(m));
                }
            }
            docs.push_back(
                {doc_id(day, i), doc_time(day, i, spec.docs_per_day), compose(tokens, day + i), "g1", spec.topic});
        }
    }
    return docs;
}

NoiseFixture noise_fixture(std::uint64_t seed, std::size_t days, std::size_t docs_per_day) {
    const std::vector<std::vector<std::string>> themes = {
        {"holiday", "celebrate", "festival", "parade", "greetings"},
        {"obama", "congress", "bill", "senate", "vote"},
        {"whitehouse", "policy", "update", "announce", "press"},
    };
    NoiseFixture out;
    out.cluster_tokens = themes[0];
    out.noise_tokens = {"watch", "video"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_theme(0, themes.size() - 1);
    for (std::size_t day = 0; day < days; ++day) {
        for (std::size_t i = 0; i < docs_per_day; ++i) {
            const auto theme = pick_theme(rng);
            std::vector<std::string> tokens;
            for (std::size_t t = 0; t < themes.size(); ++t) {
                for (const auto& token : themes[t]) {
                    if (u(rng) < (t == theme ? 0.7 : 0.05)) {
                        tokens.push_back(token);
                    }
                }
            }
            for (const auto& token : out.noise_tokens) {
                if (u(rng) < 0.95) {
                    tokens.push_back(token);
                }
            }
            out.documents.push_back(
                {doc_id(day, i), doc_time(day, i, docs_per_day), compose(tokens, day + i), "g1", "festivals"});
        }
    }
    return out;
}

}  // namespace conceptflow::synthetic
