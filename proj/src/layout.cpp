#include "conceptflow/layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "conceptflow/error.hpp"

namespace conceptflow {

using nlohmann::json;

std::vector<Interval> intervals_of(std::span<const TimeSlice> slices) {
    std::vector<Interval> out;
    out.reserve(slices.size());
    for (const auto& s : slices) {
        out.push_back({s.start, s.end});
    }
    return out;
}

SpringAxis spring_axis(std::span<const Interval> slices, double w_min, double w_scale) {
    if (!(w_min > 0.0)) {
        throw Error("layout", "w_min must be positive");
    }
    SpringAxis axis;
    double x = 0.0;
    for (const auto& s : slices) {
        const double days = std::max(0.0, static_cast<double>(s.end - s.start) / kSecondsPerDay);
        const double width = w_min + w_scale * std::log2(1.0 + days);
        axis.slots.push_back({s.start, s.end, x, x + width, days / width});
        x += width;
    }
    return axis;
}

std::vector<double> compress_streamlines(std::span<const double> positions, const CompressionParams& params) {
    const std::size_t n = positions.size();
    std::vector<double> out(positions.begin(), positions.end());
    if (n == 0) {
        return out;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });

    // Cluster boundaries in sorted order: cluster c spans order[first[c] .. first[c+1]).
    std::vector<std::size_t> first{0};
    for (std::size_t k = 1; k < n; ++k) {
        if (positions[order[k]] - positions[order[k - 1]] > params.gap_thresh) {
            first.push_back(k);
        }
    }
    first.push_back(n);
    const std::size_t clusters = first.size() - 1;

    std::vector<double> lo(clusters), hi(clusters);
    for (std::size_t c = 0; c < clusters; ++c) {
        double centroid = 0.0;
        for (std::size_t k = first[c]; k < first[c + 1]; ++k) {
            centroid += positions[order[k]];
        }
        centroid /= static_cast<double>(first[c + 1] - first[c]);
        for (std::size_t k = first[c]; k < first[c + 1]; ++k) {
            out[order[k]] = centroid + params.kappa * (positions[order[k]] - centroid);
        }
        lo[c] = out[order[first[c]]];
        hi[c] = out[order[first[c + 1] - 1]];
    }

    std::vector<double> shift(clusters, 0.0);
    for (std::size_t c = 1; c < clusters; ++c) {
        const double gap = lo[c] - hi[c - 1];
        shift[c] = shift[c - 1] + std::max(0.0, params.min_gap - gap);
    }
    const double mean_shift = std::accumulate(shift.begin(), shift.end(), 0.0) / static_cast<double>(clusters);
    for (std::size_t c = 0; c < clusters; ++c) {
        const double s = shift[c] - mean_shift;
        if (s == 0.0) {
            continue;
        }
        for (std::size_t k = first[c]; k < first[c + 1]; ++k) {
            out[order[k]] += s;
        }
    }
    return out;
}

std::vector<double> compress_frame(std::span<const double> positions, double kappa) {
    if (positions.empty()) {
        return {};
    }
    auto [lo, hi] = std::minmax_element(positions.begin(), positions.end());
    const double range = *hi - *lo;
    return compress_streamlines(positions, {0.15 * range, kappa, 0.1 * range});
}

std::vector<FlowLine> build_flowlines(std::span<const ProjectionFrame> frames,
                                      const SliceFrequencies& frequencies, const SpringAxis& axis,
                                      double height, std::span<const std::string> vocabulary,
                                      const FlowParams& params) {
    if (frames.empty()) {
        throw Error("layout", "no frames");
    }
    if (frequencies.size() != frames.size() || axis.slots.size() != frames.size()) {
        throw Error("layout", "frames, frequencies and axis slots differ in count");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t max_freq = 0;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        for (double y : frames[t].positions) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        for (const auto& [token, f] : frequencies[t]) {
            max_freq = std::max(max_freq, f);
        }
    }
    const double span = height - 2.0 * params.margin;
    auto to_canvas = [&](double y) {
        if (!(hi > lo)) {
            return 0.5 * height;
        }
        return params.margin + (y - lo) / (hi - lo) * span;
    };

    std::vector<FlowLine> lines;
    lines.reserve(vocabulary.size());
    for (const auto& token : vocabulary) {
        FlowLine line;
        line.token = token;
        for (std::size_t t = 0; t < frames.size(); ++t) {
            const double* pos = frames[t].position_of(token);
            auto it = frequencies[t].find(token);
            const std::size_t freq = it == frequencies[t].end() ? 0 : it->second;
            if (pos == nullptr || freq < params.presence_threshold || max_freq == 0) {
                line.gaps.push_back(t);
                continue;
            }
            FlowSegment seg;
            seg.slice = t;
            seg.x0 = axis.slots[t].x0;
            seg.x1 = axis.slots[t].x1;
            seg.y = to_canvas(*pos);
            seg.width = params.w_floor +
                        params.w_span * std::sqrt(static_cast<double>(freq) / static_cast<double>(max_freq));
            seg.frequency = freq;
            line.segments.push_back(seg);
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

double monotone_cubic(std::span<const double> xs, std::span<const double> ys, double x) {
    const std::size_t n = xs.size();
    if (n == 0 || ys.size() != n) {
        throw Error("layout", "monotone_cubic: bad knots");
    }
    if (n == 1 || x <= xs.front()) {
        return ys.front();
    }
    if (x >= xs.back()) {
        return ys.back();
    }
    std::vector<double> secant(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        secant[k] = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    }
    std::vector<double> slope(n);
    slope.front() = secant.front();
    slope.back() = secant.back();
    for (std::size_t k = 1; k + 1 < n; ++k) {
        slope[k] = secant[k - 1] * secant[k] <= 0.0 ? 0.0 : 0.5 * (secant[k - 1] + secant[k]);
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (secant[k] == 0.0) {
            slope[k] = slope[k + 1] = 0.0;
            continue;
        }
        const double a = slope[k] / secant[k];
        const double b = slope[k + 1] / secant[k];
        const double r = a * a + b * b;
        if (r > 9.0) {
            const double tau = 3.0 / std::sqrt(r);
            slope[k] = tau * a * secant[k];
            slope[k + 1] = tau * b * secant[k];
        }
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double h = xs[k + 1] - xs[k];
    const double t = (x - xs[k]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * ys[k] + (t3 - 2 * t2 + t) * h * slope[k] + (-2 * t3 + 3 * t2) * ys[k + 1] +
           (t3 - t2) * h * slope[k + 1];
}

std::vector<std::vector<FlowSample>> flow_path(const FlowLine& line, int samples_per_connector) {
    std::vector<std::vector<FlowSample>> paths;
    // Knots: the centre of each segment; flat runs span the middle half of
    // a slot so connectors have room to bend.
    std::vector<FlowSample> current;
    for (std::size_t s = 0; s < line.segments.size(); ++s) {
        const auto& seg = line.segments[s];
        const double quarter = 0.25 * (seg.x1 - seg.x0);
        const bool joined = s > 0 && line.segments[s - 1].slice + 1 == seg.slice;
        if (!joined) {
            if (!current.empty()) {
                paths.push_back(std::move(current));
                current.clear();
            }
            current.push_back({seg.x0, seg.y, seg.width});
        } else {
            const auto& prev = line.segments[s - 1];
            const double xa = prev.x1 - 0.25 * (prev.x1 - prev.x0);
            const double xb = seg.x0 + quarter;
            // Flat runs on both sides make the interior slopes zero, so the
            // connector is an S-curve with horizontal tangents.
            const double xs[] = {prev.x0 + 0.25 * (prev.x1 - prev.x0), xa, xb, seg.x1 - quarter};
            const double ys[] = {prev.y, prev.y, seg.y, seg.y};
            for (int k = 1; k < samples_per_connector; ++k) {
                const double x = xa + (xb - xa) * k / samples_per_connector;
                const double w = prev.width + (seg.width - prev.width) * k / samples_per_connector;
                current.push_back({x, monotone_cubic(xs, ys, x), w});
            }
        }
        current.push_back({seg.x0 + quarter, seg.y, seg.width});
        const bool continues = s + 1 < line.segments.size() && line.segments[s + 1].slice == seg.slice + 1;
        current.push_back({seg.x1 - quarter, seg.y, seg.width});
        if (!continues) {
            current.push_back({seg.x1, seg.y, seg.width});
        }
    }
    if (!current.empty()) {
        paths.push_back(std::move(current));
    }
    return paths;
}

double overlap_area(double ax, double ay, double aw, double ah, double bx, double by, double bw, double bh) {
    const double w = std::min(ax + aw, bx + bw) - std::max(ax, bx);
    const double h = std::min(ay + ah, by + bh) - std::max(ay, by);
    return w > 0.0 && h > 0.0 ? w * h : 0.0;
}

std::vector<LabelPlacement> place_labels(std::span<const FlowLine> lines,
                                         const std::map<std::string, double>& importance,
                                         double canvas_w, double canvas_h, const LabelParams& params) {
    if (!(params.dx > 0.0 && params.dy > 0.0)) {
        throw Error("layout", "label grid steps must be positive");
    }
    std::vector<LabelPlacement> placed;
    if (params.max_labels == 0) {
        return placed;
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!lines[i].segments.empty()) {
            order.push_back(i);
        }
    }
    auto weight = [&](std::size_t i) {
        auto it = importance.find(lines[i].token);
        return it == importance.end() ? 0.0 : it->second;
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double wa = weight(a);
        const double wb = weight(b);
        if (wa != wb) {
            return wa > wb;
        }
        return lines[a].token < lines[b].token;
    });

    const double max_offset = std::hypot(params.radius * params.dx, params.radius * params.dy);
    for (std::size_t i : order) {
        if (placed.size() >= params.max_labels) {
            break;
        }
        const auto& line = lines[i];
        const FlowSegment* anchor = &line.segments.front();
        for (const auto& seg : line.segments) {
            if (seg.width > anchor->width) {
                anchor = &seg;
            }
        }
        const double w = params.char_width * params.font_size * static_cast<double>(line.token.size());
        const double h = params.font_size + 2.0;
        const double cx = 0.5 * (anchor->x0 + anchor->x1);
        const double cy = anchor->y;
        const double bound = 10.0 * params.line_overlap_tolerance * w * h + max_offset;

        bool found = false;
        LabelPlacement best;
        double best_magnitude = 0.0;
        for (int gy = -params.radius; gy <= params.radius; ++gy) {
            for (int gx = -params.radius; gx <= params.radius; ++gx) {
                const double ox = gx * params.dx;
                const double oy = gy * params.dy;
                const double x = cx + ox - 0.5 * w;
                const double y = cy + oy - 0.5 * h;
                if (x < 0.0 || y < 0.0 || x + w > canvas_w || y + h > canvas_h) {
                    continue;
                }
                bool blocked = false;
                for (const auto& other : placed) {
                    if (overlap_area(x, y, w, h, other.x, other.y, other.w, other.h) > 0.0) {
                        blocked = true;
                        break;
                    }
                }
                if (blocked) {
                    continue;
                }
                double line_overlap = 0.0;
                for (std::size_t j = 0; j < lines.size(); ++j) {
                    if (j == i) {
                        continue;
                    }
                    for (const auto& seg : lines[j].segments) {
                        line_overlap += overlap_area(x, y, w, h, seg.x0, seg.y - 0.5 * seg.width,
                                                     seg.x1 - seg.x0, seg.width);
                    }
                }
                const double magnitude = std::hypot(ox, oy);
                const double score = 10.0 * line_overlap + magnitude;
                if (!found || score < best.score || (score == best.score && magnitude < best_magnitude)) {
                    found = true;
                    best = {line.token, anchor->slice, x, y, w, h, score};
                    best_magnitude = magnitude;
                }
            }
        }
        if (found && best.score < bound) {
            placed.push_back(std::move(best));
        }
    }
    return placed;
}

json layout_to_json(const FlowLayout& layout) {
    json axis = json::array();
    for (const auto& slot : layout.axis.slots) {
        axis.push_back({{"x0", slot.x0},
                        {"x1", slot.x1},
                        {"coil_density", slot.coil_density},
                        {"start", format_timestamp(slot.start)},
                        {"end", format_timestamp(slot.end)}});
    }
    json lines = json::array();
    for (const auto& line : layout.lines) {
        json segments = json::array();
        for (const auto& seg : line.segments) {
            segments.push_back({{"slice", seg.slice},
                                {"x0", seg.x0},
                                {"x1", seg.x1},
                                {"y", seg.y},
                                {"width", seg.width}});
        }
        lines.push_back({{"token", line.token}, {"segments", std::move(segments)}});
    }
    json labels = json::array();
    for (const auto& label : layout.labels) {
        labels.push_back({{"token", label.token},
                          {"x", label.x},
                          {"y", label.y},
                          {"w", label.w},
                          {"h", label.h},
                          {"slice", label.slice}});
    }
    return {{"canvas", {{"w", layout.width}, {"h", layout.height}}},
            {"axis", std::move(axis)},
            {"lines", std::move(lines)},
            {"labels", std::move(labels)}};
}

FlowLayout layout_from_json(const json& j) {
    FlowLayout layout;
    layout.width = j.at("canvas").at("w").get<double>();
    layout.height = j.at("canvas").at("h").get<double>();
    for (const auto& a : j.at("axis")) {
        layout.axis.slots.push_back({parse_timestamp(a.at("start").get<std::string>()),
                                     parse_timestamp(a.at("end").get<std::string>()), a.at("x0").get<double>(),
                                     a.at("x1").get<double>(), a.at("coil_density").get<double>()});
    }
    for (const auto& l : j.at("lines")) {
        FlowLine line;
        line.token = l.at("token").get<std::string>();
        for (const auto& s : l.at("segments")) {
            FlowSegment seg;
            seg.slice = s.at("slice").get<std::size_t>();
            seg.x0 = s.at("x0").get<double>();
            seg.x1 = s.at("x1").get<double>();
            seg.y = s.at("y").get<double>();
            seg.width = s.at("width").get<double>();
            line.segments.push_back(seg);
        }
        std::size_t next = 0;
        for (const auto& seg : line.segments) {
            for (; next < seg.slice; ++next) {
                line.gaps.push_back(next);
            }
            next = seg.slice + 1;
        }
        for (; next < layout.axis.slots.size(); ++next) {
            line.gaps.push_back(next);
        }
        layout.lines.push_back(std::move(line));
    }
    for (const auto& l : j.at("labels")) {
        layout.labels.push_back({l.at("token").get<std::string>(), l.at("slice").get<std::size_t>(),
                                 l.at("x").get<double>(), l.at("y").get<double>(), l.at("w").get<double>(),
                                 l.at("h").get<double>(), 0.0});
    }
    return layout;
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string layout_to_svg(const FlowLayout& layout) {
    constexpr double kAxisBand = 30.0;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(layout.width) << "\" height=\""
        << fmt(layout.height + kAxisBand) << "\" viewBox=\"0 0 " << fmt(layout.width) << ' '
        << fmt(layout.height + kAxisBand) << "\">\n";
    svg << "<g class=\"lines\">\n";
    for (std::size_t i = 0; i < layout.lines.size(); ++i) {
        const auto& line = layout.lines[i];
        const int hue = static_cast<int>((i * 137) % 360);
        for (const auto& path : flow_path(line)) {
            svg << "<path class=\"flow\" data-token=\"" << escape_xml(line.token) << "\" fill=\"hsl(" << hue
                << ",55%,55%)\" fill-opacity=\"0.8\" d=\"M";
            for (std::size_t k = 0; k < path.size(); ++k) {
                svg << (k == 0 ? "" : " L") << fmt(path[k].x) << ',' << fmt(path[k].y - 0.5 * path[k].width);
            }
            for (std::size_t k = path.size(); k-- > 0;) {
                svg << " L" << fmt(path[k].x) << ',' << fmt(path[k].y + 0.5 * path[k].width);
            }
            svg << " Z\"/>\n";
        }
    }
    svg << "</g>\n<g class=\"axis\">\n";
    const double base = layout.height + 0.5 * kAxisBand;
    for (const auto& slot : layout.axis.slots) {
        const double days = slot.coil_density * (slot.x1 - slot.x0);
        const int coils = std::clamp(static_cast<int>(std::lround(days)), 1,
                                     std::max(1, static_cast<int>((slot.x1 - slot.x0) / 2.0)));
        const double step = (slot.x1 - slot.x0) / coils;
        svg << "<polyline class=\"coil\" fill=\"none\" stroke=\"#555\" points=\"";
        for (int c = 0; c <= coils; ++c) {
            const double x = slot.x0 + c * step;
            svg << fmt(x) << ',' << fmt(base + (c % 2 == 0 ? -5.0 : 5.0)) << ' ';
        }
        svg << "\"/>\n";
        svg << "<line stroke=\"#999\" x1=\"" << fmt(slot.x0) << "\" y1=\"" << fmt(base - 8) << "\" x2=\""
            << fmt(slot.x0) << "\" y2=\"" << fmt(base + 8) << "\"/>\n";
    }
    svg << "</g>\n<g class=\"labels\" font-family=\"sans-serif\">\n";
    for (const auto& label : layout.labels) {
        svg << "<text data-token=\"" << escape_xml(label.token) << "\" x=\"" << fmt(label.x) << "\" y=\""
            << fmt(label.y + label.h - 3.0) << "\" font-size=\"" << fmt(label.h - 2.0) << "\">"
            << escape_xml(label.token) << "</text>\n";
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

}  // namespace conceptflow
