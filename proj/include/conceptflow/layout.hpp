#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptflow/ingest.hpp"
#include "conceptflow/projection.hpp"
#include "conceptflow/slicing.hpp"

namespace conceptflow {

struct Interval {
    Timestamp start = 0;
    Timestamp end = 0;
};

std::vector<Interval> intervals_of(std::span<const TimeSlice> slices);

struct AxisSlot {
    Timestamp start = 0;
    Timestamp end = 0;
    double x0 = 0.0;
    double x1 = 0.0;
    double coil_density = 0.0;  // days per canvas unit
};

/// Spring time axis: slot width = w_min + w_scale * log2(1 + duration_days).
struct SpringAxis {
    std::vector<AxisSlot> slots;

    double width() const { return slots.empty() ? 0.0 : slots.back().x1; }
};

SpringAxis spring_axis(std::span<const Interval> slices, double w_min = 40.0, double w_scale = 20.0);

struct CompressionParams {
    double gap_thresh = 0.0;
    double kappa = 0.5;
    double min_gap = 0.0;
};

/// Splits sorted positions into clusters at gaps wider than gap_thresh,
/// shrinks each cluster toward its centroid by kappa, then pushes adjacent
/// clusters apart to at least min_gap. The pushes are balanced so that the
/// mean cluster shift is zero. Output is in input order.
std::vector<double> compress_streamlines(std::span<const double> positions, const CompressionParams& params);

/// compress_streamlines with thresholds relative to the frame's range:
/// gap_thresh = 0.15 * range, min_gap = 0.1 * range.
std::vector<double> compress_frame(std::span<const double> positions, double kappa = 0.5);

struct FlowSegment {
    std::size_t slice = 0;
    double x0 = 0.0;
    double x1 = 0.0;
    double y = 0.0;
    double width = 0.0;
    std::size_t frequency = 0;
};

struct FlowLine {
    std::string token;
    std::vector<FlowSegment> segments;  // ascending slice
    std::vector<std::size_t> gaps;      // slices without a segment
};

struct FlowParams {
    double margin = 20.0;
    double w_floor = 1.0;
    double w_span = 6.0;
    std::size_t presence_threshold = 2;
};

/// Per-slice document frequency of each concept.
using SliceFrequencies = std::vector<std::map<std::string, std::size_t>>;

/// One line per vocabulary token. Positions of all frames share a single
/// affine map onto [margin, height - margin]; widths are
/// w_floor + w_span * sqrt(freq / max_freq) with max_freq taken over all
/// slices and concepts.
std::vector<FlowLine> build_flowlines(std::span<const ProjectionFrame> frames,
                                      const SliceFrequencies& frequencies, const SpringAxis& axis,
                                      double height, std::span<const std::string> vocabulary,
                                      const FlowParams& params = {});

struct FlowSample {
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
};

/// Fritsch-Carlson monotone cubic interpolant through (xs, ys), xs strictly
/// increasing, evaluated at x (clamped to the knot range).
double monotone_cubic(std::span<const double> xs, std::span<const double> ys, double x);

/// Centre-line polylines of a flow line: flat runs over each segment joined
/// by monotone cubic connectors between adjacent slices, with the width
/// blended linearly across each connector. A missing slice starts a new
/// polyline.
std::vector<std::vector<FlowSample>> flow_path(const FlowLine& line, int samples_per_connector = 12);

struct LabelPlacement {
    std::string token;
    std::size_t slice = 0;
    double x = 0.0;  // top-left corner
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    double score = 0.0;
};

struct LabelParams {
    double dx = 4.0;
    double dy = 4.0;
    int radius = 8;  // grid cells in each direction
    std::size_t max_labels = 40;
    double font_size = 11.0;
    double char_width = 0.6;  // times font_size
    /// Accept a label while its overlap with other lines stays under this
    /// fraction of its own area.
    double line_overlap_tolerance = 0.25;
};

/// Overlap area of two axis-aligned rectangles given as top-left + size.
double overlap_area(double ax, double ay, double aw, double ah, double bx, double by, double bw, double bh);

/// Greedy grid-search label placement in descending importance. Candidates
/// are grid offsets around the centre of the line's widest segment, scored
/// by 10 * (overlap with other lines) + offset distance. Candidates that
/// overlap a placed label or leave the canvas are rejected.
std::vector<LabelPlacement> place_labels(std::span<const FlowLine> lines,
                                         const std::map<std::string, double>& importance,
                                         double canvas_w, double canvas_h, const LabelParams& params = {});

struct FlowLayout {
    double width = 0.0;
    double height = 0.0;
    SpringAxis axis;
    std::vector<FlowLine> lines;
    std::vector<LabelPlacement> labels;
};

nlohmann::json layout_to_json(const FlowLayout& layout);
FlowLayout layout_from_json(const nlohmann::json& j);
std::string layout_to_svg(const FlowLayout& layout);

}  // namespace conceptflow
