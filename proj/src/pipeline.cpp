#include "conceptflow/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "conceptflow/error.hpp"

namespace conceptflow {

using nlohmann::json;

namespace {

std::string duration_to_string(Timestamp seconds) {
    if (seconds % (7 * kSecondsPerDay) == 0) {
        return std::to_string(seconds / (7 * kSecondsPerDay)) + "w";
    }
    if (seconds % kSecondsPerDay == 0) {
        return std::to_string(seconds / kSecondsPerDay) + "d";
    }
    if (seconds % 3600 == 0) {
        return std::to_string(seconds / 3600) + "h";
    }
    if (seconds % 60 == 0) {
        return std::to_string(seconds / 60) + "m";
    }
    return std::to_string(seconds) + "s";
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("output", "cannot write " + path.string());
    }
    out << contents;
    if (!out) {
        throw Error("output", "error writing " + path.string());
    }
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(stage, e.what());
    }
}

std::filesystem::path resolve(const json& j, const char* key, const std::filesystem::path& base) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return {};
    }
    std::filesystem::path p = j.at(key).get<std::string>();
    if (p.empty() || p.is_absolute() || base.empty()) {
        return p;
    }
    return base / p;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    return run_stage("config", [&] {
        PipelineConfig c;
        c.corpus = resolve(j, "corpus", base_dir);
        c.embeddings = resolve(j, "embeddings", base_dir);
        c.stopwords = resolve(j, "stopwords", base_dir);
        c.output_dir = resolve(j, "output_dir", base_dir);
        c.topic = j.value("topic", c.topic);
        c.k = j.value("k", c.k);
        if (j.contains("granularity")) {
            const auto& g = j.at("granularity");
            c.granularity = g.is_string() ? parse_duration(g.get<std::string>()) : g.get<Timestamp>();
        }
        c.slicing.sig = j.value("sig", c.slicing.sig);
        c.slicing.m_min = j.value("m_min", c.slicing.m_min);
        if (j.contains("max_slice_days")) {
            c.slicing.max_duration = static_cast<Timestamp>(j.at("max_slice_days").get<double>() * kSecondsPerDay);
        }
        c.alpha_feat = j.value("alpha_feat", c.alpha_feat);
        c.projection.alpha_proj = j.value("alpha_proj", c.projection.alpha_proj);
        c.projection.perplexity = j.value("perplexity", c.projection.perplexity);
        c.projection.seed = j.value("seed", c.projection.seed);
        c.projection.invert_pc = j.value("invert_pc", c.projection.invert_pc);
        c.projection.optimizer.iterations = j.value("iterations", c.projection.optimizer.iterations);
        c.min_frame_freq = j.value("min_frame_freq", c.min_frame_freq);
        if (j.contains("canvas")) {
            c.canvas_height = j.at("canvas").value("h", c.canvas_height);
        }
        c.axis_w_min = j.value("w_min", c.axis_w_min);
        c.axis_w_scale = j.value("w_scale", c.axis_w_scale);
        c.kappa = j.value("kappa", c.kappa);
        c.flow.presence_threshold = j.value("presence_threshold", c.flow.presence_threshold);
        c.labels.max_labels = j.value("max_labels", c.labels.max_labels);
        return c;
    });
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("config", "cannot read config file " + path.string());
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error("config", "config file " + path.string() + " is not a JSON object");
    }
    return from_json(j, path.parent_path());
}

json PipelineConfig::to_json() const {
    auto absolute = [](const std::filesystem::path& p) {
        return p.empty() ? std::string() : std::filesystem::absolute(p).lexically_normal().string();
    };
    return {{"corpus", absolute(corpus)},
            {"embeddings", absolute(embeddings)},
            {"stopwords", absolute(stopwords)},
            {"output_dir", absolute(output_dir)},
            {"topic", topic},
            {"k", k},
            {"granularity", duration_to_string(granularity)},
            {"sig", slicing.sig},
            {"m_min", slicing.m_min},
            {"max_slice_days", static_cast<double>(slicing.max_duration) / kSecondsPerDay},
            {"alpha_feat", alpha_feat},
            {"alpha_proj", projection.alpha_proj},
            {"perplexity", projection.perplexity},
            {"seed", projection.seed},
            {"invert_pc", projection.invert_pc},
            {"iterations", projection.optimizer.iterations},
            {"min_frame_freq", min_frame_freq},
            {"canvas", {{"h", canvas_height}}},
            {"w_min", axis_w_min},
            {"w_scale", axis_w_scale},
            {"kappa", kappa},
            {"presence_threshold", flow.presence_threshold},
            {"max_labels", labels.max_labels}};
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error("config", what); };
    if (k == 0) fail("k must be at least 1");
    if (granularity <= 0) fail("granularity must be positive");
    if (!(slicing.sig > 0.0 && slicing.sig < 1.0)) fail("sig must lie in (0, 1)");
    if (slicing.m_min == 0) fail("m_min must be at least 1");
    if (slicing.max_duration < granularity) fail("max slice duration is shorter than the granularity");
    if (!(alpha_feat >= 0.0 && alpha_feat <= 1.0)) fail("alpha_feat must lie in [0, 1]");
    if (!(projection.alpha_proj >= 0.0 && projection.alpha_proj <= 1.0)) fail("alpha_proj must lie in [0, 1]");
    if (!(projection.perplexity >= 1.0)) fail("perplexity must be at least 1");
    if (projection.optimizer.iterations <= 0) fail("iterations must be positive");
    if (min_frame_freq == 0) fail("min_frame_freq must be at least 1");
    if (!(canvas_height > 2.0 * flow.margin)) fail("canvas height must exceed twice the margin");
    if (!(axis_w_min > 0.0) || axis_w_scale < 0.0) fail("axis widths must be positive");
    if (!(kappa > 0.0 && kappa <= 1.0)) fail("kappa must lie in (0, 1]");
}

std::vector<std::string> PreparedCorpus::concept_tokens() const {
    std::vector<std::string> tokens;
    tokens.reserve(concepts.size());
    for (const auto& c : concepts) {
        tokens.push_back(c.token);
    }
    return tokens;
}

PreparedCorpus prepare(const PipelineConfig& config) {
    config.validate();
    auto loaded = run_stage("ingest", [&] { return load_corpus(config.corpus); });
    EmbeddingTable embeddings;
    if (!config.embeddings.empty()) {
        embeddings = run_stage("features", [&] { return load_embeddings(config.embeddings); });
    }
    auto prepared = prepare(config, std::move(loaded.documents), std::move(embeddings));
    prepared.rejected = std::move(loaded.rejected);
    return prepared;
}

PreparedCorpus prepare(const PipelineConfig& config, std::vector<Document> documents, EmbeddingTable embeddings) {
    config.validate();
    PreparedCorpus prepared;
    prepared.config = config;
    prepared.embeddings = std::move(embeddings);

    const Tokenizer tokenizer = config.stopwords.empty()
                                    ? Tokenizer()
                                    : run_stage("ingest", [&] { return Tokenizer::from_file(config.stopwords); });
    auto topic_docs = filter_topic(documents, config.topic);
    if (topic_docs.empty()) {
        throw Error("slicing", "empty topic");
    }
    prepared.corpus = TokenizedCorpus::build(std::move(topic_docs), tokenizer);
    prepared.concepts =
        run_stage("ingest", [&] { return extract_concepts(prepared.corpus.documents, {}, config.k, tokenizer); });
    for (auto& c : prepared.concepts) {
        c.topic = config.topic;
    }
    const auto tokens = prepared.concept_tokens();

    prepared.slicing = run_stage("slicing", [&] {
        auto base = uniform_slices(prepared.corpus, config.granularity, tokens);
        return detect_boundaries(base, tokens.size(), config.slicing, tokens);
    });
    prepared.occurrence = run_stage("features", [&] {
        std::vector<OccurrenceMatrix> out;
        out.reserve(prepared.slicing.slices.size());
        for (const auto& slice : prepared.slicing.slices) {
            out.push_back(build_occurrence(slice.docs, tokens, prepared.corpus));
        }
        return out;
    });
    return prepared;
}

std::vector<FrameInput> frame_inputs(const PreparedCorpus& prepared, const std::set<std::string>& removed) {
    return run_stage("features", [&] {
        const auto tokens = prepared.concept_tokens();
        std::vector<FrameInput> frames;
        frames.reserve(prepared.slicing.slices.size());
        for (std::size_t t = 0; t < prepared.slicing.slices.size(); ++t) {
            const auto& occ = prepared.occurrence[t];
            const auto& flags = prepared.slicing.slices[t].mutation_flags;
            FrameInput input;
            std::vector<std::vector<std::size_t>> rows;
            for (std::size_t m = 0; m < tokens.size(); ++m) {
                if (removed.contains(tokens[m]) || occ.row_count(m) < prepared.config.min_frame_freq) {
                    continue;
                }
                input.tokens.push_back(tokens[m]);
                input.mutation_flags.push_back(flags[m]);
                auto r = occ.row(m);
                rows.emplace_back(r.begin(), r.end());
            }
            input.features = build_features(prepared.embeddings, input.tokens,
                                            OccurrenceMatrix(occ.cols(), std::move(rows)),
                                            prepared.config.alpha_feat);
            frames.push_back(std::move(input));
        }
        return frames;
    });
}

Snapshot build_snapshot(const PreparedCorpus& prepared, const std::set<std::string>& removed,
                        std::size_t revision) {
    const auto& config = prepared.config;
    Snapshot snap;
    snap.revision = revision;
    snap.removed = removed;
    for (const auto& c : prepared.concepts) {
        if (!removed.contains(c.token)) {
            snap.vocabulary.push_back(c.token);
        }
    }
    auto inputs = frame_inputs(prepared, removed);
    snap.frames = run_stage("projection", [&] { return chain_project(inputs, config.projection); });

    run_stage("layout", [&] {
        std::vector<ProjectionFrame> compressed = snap.frames;
        for (auto& frame : compressed) {
            frame.positions = compress_frame(frame.positions, config.kappa);
        }
        const auto tokens = prepared.concept_tokens();
        SliceFrequencies freqs(prepared.slicing.slices.size());
        for (std::size_t t = 0; t < freqs.size(); ++t) {
            for (std::size_t m = 0; m < tokens.size(); ++m) {
                if (!removed.contains(tokens[m])) {
                    const auto f = prepared.occurrence[t].row_count(m);
                    freqs[t][tokens[m]] = f;
                    auto& peak = snap.importance[tokens[m]];
                    peak = std::max(peak, static_cast<double>(f));
                }
            }
        }
        const auto intervals = intervals_of(prepared.slicing.slices);
        snap.layout.axis = spring_axis(intervals, config.axis_w_min, config.axis_w_scale);
        snap.layout.width = snap.layout.axis.width();
        snap.layout.height = config.canvas_height;
        snap.layout.lines =
            build_flowlines(compressed, freqs, snap.layout.axis, config.canvas_height, snap.vocabulary, config.flow);
        snap.layout.labels =
            place_labels(snap.layout.lines, snap.importance, snap.layout.width, snap.layout.height, config.labels);
        snap.layout_json = layout_to_json(snap.layout).dump();
        return 0;
    });
    return snap;
}

SessionState run_pipeline(const PipelineConfig& config) {
    return run_pipeline(std::make_shared<const PreparedCorpus>(prepare(config)));
}

SessionState run_pipeline(std::shared_ptr<const PreparedCorpus> prepared) {
    SessionState state;
    state.snapshot = std::make_shared<const Snapshot>(build_snapshot(*prepared, {}, 0));
    state.prepared = std::move(prepared);
    if (!state.prepared->config.output_dir.empty()) {
        write_revision(state.prepared->config.output_dir, *state.prepared, *state.snapshot);
    }
    return state;
}

SessionState reproject(const SessionState& state, const std::set<std::string>& remove) {
    const auto& vocab = state.snapshot->vocabulary;
    std::vector<std::string> unknown;
    for (const auto& token : remove) {
        if (std::find(vocab.begin(), vocab.end(), token) == vocab.end()) {
            unknown.push_back(token);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& u : unknown) {
            list += (list.empty() ? "" : ", ") + u;
        }
        throw NotFound("reproject", "unknown concepts: " + list);
    }
    auto removed = state.snapshot->removed;
    removed.insert(remove.begin(), remove.end());
    SessionState next;
    next.prepared = state.prepared;
    next.snapshot = std::make_shared<const Snapshot>(
        build_snapshot(*state.prepared, removed, state.snapshot->revision + 1));
    if (!next.prepared->config.output_dir.empty()) {
        write_revision(next.prepared->config.output_dir, *next.prepared, *next.snapshot);
    }
    return next;
}

std::vector<Document> docs_for(const SessionState& state, const std::string& token, std::size_t slice_index) {
    const auto& vocab = state.snapshot->vocabulary;
    if (std::find(vocab.begin(), vocab.end(), token) == vocab.end()) {
        throw NotFound("docs", "unknown concept '" + token + "'");
    }
    const auto& slices = state.prepared->slicing.slices;
    if (slice_index >= slices.size()) {
        throw NotFound("docs", "no slice " + std::to_string(slice_index));
    }
    const auto& corpus = state.prepared->corpus;
    std::vector<Document> out;
    for (auto d : slices[slice_index].docs) {
        if (corpus.contains(d, token)) {
            out.push_back(corpus.documents[d]);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Document& a, const Document& b) { return a.timestamp < b.timestamp; });
    return out;
}

json slice_manifest(const PreparedCorpus& prepared) {
    json manifest = json::array();
    for (const auto& slice : prepared.slicing.slices) {
        json mutated = json::array();
        for (std::size_t m = 0; m < slice.mutation_flags.size(); ++m) {
            if (slice.mutation_flags[m]) {
                mutated.push_back(prepared.concepts[m].token);
            }
        }
        manifest.push_back({{"start", format_timestamp(slice.start)},
                            {"end", format_timestamp(slice.end)},
                            {"n_docs", slice.n()},
                            {"anomalous_boundary", slice.anomalous_boundary},
                            {"mutated_concepts", std::move(mutated)}});
    }
    return manifest;
}

std::vector<TimeSlice> slices_from_manifest(const json& manifest, const TokenizedCorpus& corpus,
                                            std::span<const std::string> concepts) {
    return run_stage("slicing", [&] {
        std::vector<TimeSlice> slices;
        for (const auto& entry : manifest) {
            TimeSlice slice;
            slice.start = parse_timestamp(entry.at("start").get<std::string>());
            slice.end = parse_timestamp(entry.at("end").get<std::string>());
            slice.anomalous_boundary = entry.value("anomalous_boundary", false);
            slice.mutation_flags.assign(concepts.size(), false);
            for (const auto& token : entry.value("mutated_concepts", json::array())) {
                auto it = std::find(concepts.begin(), concepts.end(), token.get<std::string>());
                if (it != concepts.end()) {
                    slice.mutation_flags[static_cast<std::size_t>(it - concepts.begin())] = true;
                }
            }
            for (std::size_t d = 0; d < corpus.size(); ++d) {
                const auto ts = corpus.documents[d].timestamp;
                if (ts >= slice.start && ts < slice.end) {
                    slice.docs.push_back(d);
                }
            }
            slices.push_back(std::move(slice));
        }
        return slices;
    });
}

json frames_to_json(std::span<const ProjectionFrame> frames) {
    json out = json::array();
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto& frame = frames[t];
        json concepts = json::array();
        for (std::size_t i = 0; i < frame.tokens.size(); ++i) {
            concepts.push_back(
                {{"token", frame.tokens[i]}, {"y", frame.positions[i]}, {"mutated", bool(frame.mutation_flags[i])}});
        }
        out.push_back({{"slice_index", t},
                       {"concepts", std::move(concepts)},
                       {"cost",
                        {{"kl_main", frame.cost.kl_main},
                         {"kl_constraint", frame.cost.kl_constraint},
                         {"total", frame.cost.total}}}});
    }
    return out;
}

json concepts_to_json(const PreparedCorpus& prepared, const Snapshot& snapshot) {
    json out = json::array();
    for (const auto& c : prepared.concepts) {
        if (snapshot.removed.contains(c.token)) {
            continue;
        }
        auto it = snapshot.importance.find(c.token);
        out.push_back({{"token", c.token},
                       {"doc_freq", c.corpus_doc_freq},
                       {"importance", it == snapshot.importance.end() ? 0.0 : it->second}});
    }
    return out;
}

void write_revision(const std::filesystem::path& dir, const PreparedCorpus& prepared, const Snapshot& snapshot) {
    run_stage("output", [&] {
        std::filesystem::create_directories(dir);
        if (snapshot.revision == 0) {
            write_file(dir / "config.json", prepared.config.to_json().dump(2) + "\n");
            write_file(dir / "slices.json", slice_manifest(prepared).dump(2) + "\n");
            json concepts = json::array();
            for (const auto& c : prepared.concepts) {
                concepts.push_back({{"token", c.token}, {"doc_freq", c.corpus_doc_freq}});
            }
            write_file(dir / "concepts.json", concepts.dump(2) + "\n");
        }
        // Written to a staging directory and renamed so a revision directory
        // is either absent or complete.
        const auto final_dir = dir / ("rev_" + std::to_string(snapshot.revision));
        const auto staging = dir / (".rev_" + std::to_string(snapshot.revision) + ".tmp");
        std::filesystem::remove_all(staging);
        std::filesystem::create_directories(staging);
        write_file(staging / "layout.json", snapshot.layout_json);
        write_file(staging / "layout.svg", layout_to_svg(snapshot.layout));
        write_file(staging / "frames.json", frames_to_json(snapshot.frames).dump() + "\n");
        json session = {{"revision", snapshot.revision},
                        {"removed_concepts", json(std::vector<std::string>(snapshot.removed.begin(),
                                                                           snapshot.removed.end()))}};
        write_file(staging / "session.json", session.dump(2) + "\n");
        std::filesystem::remove_all(final_dir);
        std::filesystem::rename(staging, final_dir);
        return 0;
    });
}

SessionState restore_session(const std::filesystem::path& state_dir) {
    auto config = PipelineConfig::load(state_dir / "config.json");
    config.output_dir = state_dir;
    std::size_t latest = 0;
    bool found = false;
    for (const auto& entry : std::filesystem::directory_iterator(state_dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_directory() && name.rfind("rev_", 0) == 0 && std::filesystem::exists(entry.path() / "session.json")) {
            try {
                const auto rev = std::stoul(name.substr(4));
                latest = found ? std::max<std::size_t>(latest, rev) : rev;
                found = true;
            } catch (const std::exception&) {
            }
        }
    }
    if (!found) {
        throw NotFound("serve", "no revisions under " + state_dir.string());
    }
    std::ifstream in(state_dir / ("rev_" + std::to_string(latest)) / "session.json");
    json session = json::parse(in, nullptr, false);
    if (session.is_discarded()) {
        throw Error("serve", "corrupt session.json in revision " + std::to_string(latest));
    }
    std::set<std::string> removed;
    for (const auto& token : session.value("removed_concepts", json::array())) {
        removed.insert(token.get<std::string>());
    }
    SessionState state;
    state.prepared = std::make_shared<const PreparedCorpus>(prepare(config));
    state.snapshot = std::make_shared<const Snapshot>(build_snapshot(*state.prepared, removed, latest));
    return state;
}

Session::Session(SessionState initial) : state_(std::move(initial)) {
    history_.emplace(state_.snapshot->revision, state_.snapshot);
}

SessionState Session::current() const {
    std::lock_guard lock(state_mutex_);
    return state_;
}

std::string Session::layout_json(std::size_t revision) const {
    std::filesystem::path dir;
    {
        std::lock_guard lock(state_mutex_);
        if (auto it = history_.find(revision); it != history_.end()) {
            return it->second->layout_json;
        }
        dir = state_.prepared->config.output_dir;
    }
    if (!dir.empty()) {
        std::ifstream in(dir / ("rev_" + std::to_string(revision)) / "layout.json", std::ios::binary);
        if (in) {
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }
    }
    throw NotFound("layout", "no revision " + std::to_string(revision));
}

SessionState Session::reproject(const std::set<std::string>& remove) {
    std::lock_guard writer(writer_mutex_);
    auto next = conceptflow::reproject(current(), remove);
    std::lock_guard lock(state_mutex_);
    state_ = next;
    history_.emplace(next.snapshot->revision, next.snapshot);
    return next;
}

}  // namespace conceptflow
