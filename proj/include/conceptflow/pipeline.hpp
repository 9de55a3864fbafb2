#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "conceptflow/features.hpp"
#include "conceptflow/ingest.hpp"
#include "conceptflow/layout.hpp"
#include "conceptflow/projection.hpp"
#include "conceptflow/slicing.hpp"

namespace conceptflow {

struct PipelineConfig {
    std::filesystem::path corpus;
    std::filesystem::path embeddings;  // optional; empty means every concept is out of vocabulary
    std::filesystem::path stopwords;   // optional; empty means the built-in list
    std::filesystem::path output_dir;  // optional; empty means nothing is written
    std::string topic;                 // empty selects every document
    std::size_t k = 50;
    Timestamp granularity = kSecondsPerDay;
    SlicingParams slicing;
    double alpha_feat = kDefaultAlphaFeat;
    ProjectionParams projection;
    /// A concept joins a frame when it occurs in at least this many of the
    /// slice's documents.
    std::size_t min_frame_freq = 1;
    double canvas_height = 600.0;
    double axis_w_min = 40.0;
    double axis_w_scale = 20.0;
    double kappa = 0.5;
    FlowParams flow;
    LabelParams labels;

    /// Reads the JSON config. Relative paths resolve against `base_dir`.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static PipelineConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
    /// Throws Error("config", ...) for out-of-range fields.
    void validate() const;
};

/// Everything upstream of projection: fixed for the lifetime of a session.
struct PreparedCorpus {
    PipelineConfig config;
    TokenizedCorpus corpus;  // topic-filtered
    std::vector<Concept> concepts;
    EmbeddingTable embeddings;
    SlicingResult slicing;
    std::vector<OccurrenceMatrix> occurrence;  // per slice, rows follow `concepts`
    std::vector<RejectedLine> rejected;

    std::vector<std::string> concept_tokens() const;
};

/// One immutable revision of the projection and layout.
struct Snapshot {
    std::size_t revision = 0;
    std::set<std::string> removed;
    std::vector<std::string> vocabulary;  // concepts minus removed, in rank order
    std::vector<ProjectionFrame> frames;
    FlowLayout layout;
    std::string layout_json;
    std::map<std::string, double> importance;  // peak slice document frequency
};

struct SessionState {
    std::shared_ptr<const PreparedCorpus> prepared;
    std::shared_ptr<const Snapshot> snapshot;
};

/// Ingest, tokenise, extract concepts, slice and build occurrence matrices.
PreparedCorpus prepare(const PipelineConfig& config);

/// Documents and occurrence from memory instead of files.
PreparedCorpus prepare(const PipelineConfig& config, std::vector<Document> documents,
                       EmbeddingTable embeddings);

/// Frame inputs for the non-removed concepts of every slice.
std::vector<FrameInput> frame_inputs(const PreparedCorpus& prepared, const std::set<std::string>& removed);

/// Projects, compresses and lays out every slice with the session seed.
Snapshot build_snapshot(const PreparedCorpus& prepared, const std::set<std::string>& removed,
                        std::size_t revision);

/// Full run; writes the artifacts to config.output_dir when it is set.
SessionState run_pipeline(const PipelineConfig& config);
SessionState run_pipeline(std::shared_ptr<const PreparedCorpus> prepared);

/// New revision with `remove` added to the removed set, recomputed from
/// frame 0. Unknown tokens are rejected and `state` is left untouched.
SessionState reproject(const SessionState& state, const std::set<std::string>& remove);

/// Documents of slice `slice_index` that contain `concept`, ascending by time.
std::vector<Document> docs_for(const SessionState& state, const std::string& token, std::size_t slice_index);

nlohmann::json slice_manifest(const PreparedCorpus& prepared);
nlohmann::json frames_to_json(std::span<const ProjectionFrame> frames);
nlohmann::json concepts_to_json(const PreparedCorpus& prepared, const Snapshot& snapshot);

/// Rebuilds time slices from a slice manifest against `corpus`.
std::vector<TimeSlice> slices_from_manifest(const nlohmann::json& manifest, const TokenizedCorpus& corpus,
                                            std::span<const std::string> concepts);

/// Writes config.json, slices.json, concepts.json at the top level (first
/// revision only) and rev_N/{layout.json, layout.svg, frames.json,
/// session.json}.
void write_revision(const std::filesystem::path& dir, const PreparedCorpus& prepared, const Snapshot& snapshot);

/// Rebuilds the latest revision written under `state_dir` by re-running
/// the stored config with the stored removed set. Nothing is rewritten.
SessionState restore_session(const std::filesystem::path& state_dir);

/// Thread-safe holder of the latest SessionState. Readers always get a
/// complete revision; reprojections are serialised.
class Session {
public:
    explicit Session(SessionState initial);

    SessionState current() const;
    /// Layout JSON of a revision still held in memory or written under the
    /// output directory. Throws NotFound.
    std::string layout_json(std::size_t revision) const;
    SessionState reproject(const std::set<std::string>& remove);

private:
    mutable std::mutex state_mutex_;
    std::mutex writer_mutex_;
    SessionState state_;
    std::map<std::size_t, std::shared_ptr<const Snapshot>> history_;
};

}  // namespace conceptflow
