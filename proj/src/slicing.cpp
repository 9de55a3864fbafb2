#include "conceptflow/slicing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conceptflow/error.hpp"
#include "conceptflow/stats.hpp"

namespace conceptflow {

namespace {

Timestamp floor_div(Timestamp a, Timestamp b) {
    Timestamp q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

void absorb(BaseSlice& into, const BaseSlice& from) {
    into.start = std::min(into.start, from.start);
    into.end = std::max(into.end, from.end);
    std::vector<std::size_t> docs;
    docs.reserve(into.docs.size() + from.docs.size());
    std::merge(into.docs.begin(), into.docs.end(), from.docs.begin(), from.docs.end(),
               std::back_inserter(docs));
    into.docs = std::move(docs);
    for (std::size_t m = 0; m < into.hits.size(); ++m) {
        into.hits[m] += from.hits[m];
        into.occ_rate[m] = into.docs.empty() ? 0.0 : static_cast<double>(into.hits[m]) / into.n();
    }
}

}  // namespace

Timestamp parse_duration(std::string_view text) {
    if (text.empty()) {
        throw Error("slicing", "empty duration");
    }
    Timestamp unit = 1;
    std::string_view digits = text;
    switch (text.back()) {
        case 's': unit = 1; digits.remove_suffix(1); break;
        case 'm': unit = 60; digits.remove_suffix(1); break;
        case 'h': unit = 3600; digits.remove_suffix(1); break;
        case 'd': unit = kSecondsPerDay; digits.remove_suffix(1); break;
        case 'w': unit = 7 * kSecondsPerDay; digits.remove_suffix(1); break;
        default: break;
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                       [](char c) { return c >= '0' && c <= '9'; })) {
        throw Error("slicing", "bad duration '" + std::string(text) + "'");
    }
    Timestamp value = std::stoll(std::string(digits));
    if (value <= 0) {
        throw Error("slicing", "duration must be positive: '" + std::string(text) + "'");
    }
    return value * unit;
}

std::vector<BaseSlice> uniform_slices(const TokenizedCorpus& corpus, Timestamp granularity,
                                      std::span<const std::string> concepts) {
    if (granularity <= 0) {
        throw Error("slicing", "granularity must be positive");
    }
    if (corpus.size() == 0) {
        throw Error("slicing", "empty topic");
    }
    auto [lo, hi] = std::minmax_element(
        corpus.documents.begin(), corpus.documents.end(),
        [](const Document& a, const Document& b) { return a.timestamp < b.timestamp; });
    const Timestamp origin = floor_div(lo->timestamp, granularity) * granularity;
    const auto count = static_cast<std::size_t>((hi->timestamp - origin) / granularity + 1);

    std::vector<BaseSlice> slices(count);
    for (std::size_t i = 0; i < count; ++i) {
        slices[i].start = origin + static_cast<Timestamp>(i) * granularity;
        slices[i].end = slices[i].start + granularity;
        slices[i].hits.assign(concepts.size(), 0);
        slices[i].occ_rate.assign(concepts.size(), 0.0);
    }
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        auto idx = static_cast<std::size_t>((corpus.documents[d].timestamp - origin) / granularity);
        auto& slice = slices[idx];
        slice.docs.push_back(d);
        for (std::size_t m = 0; m < concepts.size(); ++m) {
            if (corpus.contains(d, concepts[m])) {
                ++slice.hits[m];
            }
        }
    }
    for (auto& slice : slices) {
        std::sort(slice.docs.begin(), slice.docs.end());
        for (std::size_t m = 0; m < concepts.size(); ++m) {
            slice.occ_rate[m] = slice.docs.empty() ? 0.0 : static_cast<double>(slice.hits[m]) / slice.n();
        }
    }
    return slices;
}

TTestResult welch_t(OccurrenceStats a, OccurrenceStats b, double threshold) {
    if (a.n < 2 || b.n < 2) {
        throw Error("slicing", "welch_t needs at least two documents per window");
    }
    if (a.hits > a.n || b.hits > b.n) {
        throw Error("slicing", "hits exceed document count");
    }
    TTestResult r;
    const double na = static_cast<double>(a.n);
    const double nb = static_cast<double>(b.n);
    const double pa = static_cast<double>(a.hits) / na;
    const double pb = static_cast<double>(b.hits) / nb;
    const double va = pa * (1.0 - pa) * na / (na - 1.0);
    const double vb = pb * (1.0 - pb) * nb / (nb - 1.0);
    const double sa = va / na;
    const double sb = vb / nb;

    if (sa == 0.0 && sb == 0.0) {
        if (a.hits * b.n == b.hits * a.n) {
            r.t_stat = 0.0;
            r.dof = na + nb - 2.0;
            r.p_value = 1.0;
            r.mutated = false;
        } else {
            r.t_stat = pa > pb ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
            r.dof = na + nb - 2.0;
            r.p_value = 0.0;
            r.mutated = true;
        }
        return r;
    }
    const double se2 = sa + sb;
    r.t_stat = (pa - pb) / std::sqrt(se2);
    r.dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    r.p_value = stats::student_t_two_sided(r.t_stat, r.dof);
    r.mutated = r.p_value < threshold;
    return r;
}

std::vector<BaseSlice> merge_sparse(std::vector<BaseSlice> base) {
    std::vector<BaseSlice> out;
    out.reserve(base.size());
    std::size_t i = 0;
    while (i < base.size()) {
        BaseSlice current = std::move(base[i++]);
        while (current.n() < 2 && i < base.size()) {
            absorb(current, base[i++]);
        }
        out.push_back(std::move(current));
    }
    if (out.size() > 1 && out.back().n() < 2) {
        BaseSlice last = std::move(out.back());
        out.pop_back();
        absorb(out.back(), last);
    }
    return out;
}

std::vector<TTestResult> test_boundary(const BaseSlice& before, const BaseSlice& after,
                                       double sig, std::span<const std::string> concepts) {
    const std::size_t m_count = before.hits.size();
    const double corrected = m_count == 0 ? sig : sig / static_cast<double>(m_count);
    std::vector<TTestResult> results;
    results.reserve(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        auto r = welch_t(before.stats(m), after.stats(m), corrected);
        if (m < concepts.size()) {
            r.token = concepts[m];
        }
        results.push_back(std::move(r));
    }
    return results;
}

SlicingResult detect_boundaries(std::span<const BaseSlice> base, std::size_t concept_count,
                                const SlicingParams& params, std::span<const std::string> concepts) {
    if (base.empty()) {
        throw Error("slicing", "no base slices");
    }
    if (params.m_min == 0) {
        throw Error("slicing", "m_min must be at least 1");
    }
    if (!(params.sig > 0.0 && params.sig < 1.0)) {
        throw Error("slicing", "significance must lie in (0, 1)");
    }
    for (const auto& slice : base) {
        if (slice.hits.size() != concept_count) {
            throw Error("slicing", "base slice concept statistics do not match concept count");
        }
    }
    auto windows = merge_sparse({base.begin(), base.end()});

    SlicingResult result;
    TimeSlice current;
    current.start = windows.front().start;
    current.end = windows.front().end;
    current.docs = windows.front().docs;
    current.mutation_flags.assign(concept_count, false);

    for (std::size_t w = 1; w < windows.size(); ++w) {
        const auto& prev = windows[w - 1];
        const auto& next = windows[w];
        BoundaryVerdict verdict;
        verdict.at = next.start;
        verdict.mutated.assign(concept_count, false);
        if (prev.n() >= 2 && next.n() >= 2) {
            auto tests = test_boundary(prev, next, params.sig, concepts);
            for (std::size_t m = 0; m < concept_count; ++m) {
                if (tests[m].mutated) {
                    verdict.mutated[m] = true;
                    ++verdict.mutated_count;
                }
            }
        }
        const bool anomalous = verdict.mutated_count >= params.m_min;
        const bool over_cap = next.end - current.start > params.max_duration;
        verdict.cut = anomalous || over_cap;
        if (verdict.cut) {
            result.slices.push_back(std::move(current));
            current = TimeSlice{};
            current.start = next.start;
            current.end = next.end;
            current.docs = next.docs;
            current.anomalous_boundary = anomalous;
            current.mutation_flags = verdict.mutated;
        } else {
            current.end = next.end;
            current.docs.insert(current.docs.end(), next.docs.begin(), next.docs.end());
        }
        result.boundaries.push_back(std::move(verdict));
    }
    result.slices.push_back(std::move(current));
    return result;
}

}  // namespace conceptflow
