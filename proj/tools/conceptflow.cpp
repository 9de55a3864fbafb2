// conceptflow: command-line front end for the concept-flow pipeline.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "conceptflow/error.hpp"
#include "conceptflow/pipeline.hpp"
#include "conceptflow/server.hpp"
#include "conceptflow/synthetic.hpp"

namespace cf = conceptflow;
using nlohmann::json;

namespace {

httplib::Server* g_server = nullptr;

void write_output(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-") {
        std::cout << contents;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw cf::Error("output", "cannot write " + path);
    }
    out << contents;
}

void report_rejects(const cf::PreparedCorpus& prepared) {
    if (!prepared.rejected.empty()) {
        std::cerr << "skipped " << prepared.rejected.size() << " malformed corpus lines:";
        for (const auto& r : prepared.rejected) {
            std::cerr << ' ' << r.line;
        }
        std::cerr << '\n';
    }
    for (const auto& w : prepared.embeddings.warnings) {
        std::cerr << "embeddings: " << w << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concept flows: burst-aware slicing and constrained t-SNE projection of topic keywords"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run the whole pipeline from a JSON config");
    std::string config_path;
    run->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);

    // slice
    auto* slice = app.add_subcommand("slice", "Emit the slice manifest of a corpus");
    cf::PipelineConfig slice_cfg;
    std::string slice_corpus, slice_granularity = "1d", slice_out, slice_stopwords;
    double max_slice_days = 90.0;
    slice->add_option("--corpus", slice_corpus, "Corpus (JSON lines)")->required()->check(CLI::ExistingFile);
    slice->add_option("--topic", slice_cfg.topic, "Topic label (default: all documents)");
    slice->add_option("--k", slice_cfg.k, "Concepts per topic")->capture_default_str();
    slice->add_option("--granularity", slice_granularity, "Base slice width, e.g. 1d, 12h")->capture_default_str();
    slice->add_option("--sig", slice_cfg.slicing.sig, "Significance level")->capture_default_str();
    slice->add_option("--m-min", slice_cfg.slicing.m_min, "Mutated concepts needed for a cut")->capture_default_str();
    slice->add_option("--max-slice-days", max_slice_days, "Longest merged slice")->capture_default_str();
    slice->add_option("--stopwords", slice_stopwords, "Stopword list, one per line")->check(CLI::ExistingFile);
    slice->add_option("--out", slice_out, "Output file (default: stdout)");

    // project
    auto* project = app.add_subcommand("project", "Project the slices of a manifest into frames");
    cf::PipelineConfig proj_cfg;
    std::string proj_corpus, proj_slices, proj_embeddings, proj_out, proj_stopwords;
    project->add_option("--corpus", proj_corpus, "Corpus (JSON lines)")->required()->check(CLI::ExistingFile);
    project->add_option("--slices", proj_slices, "Slice manifest from `slice`")->required()->check(CLI::ExistingFile);
    project->add_option("--embeddings", proj_embeddings, "Word vectors (text format)")->check(CLI::ExistingFile);
    project->add_option("--stopwords", proj_stopwords, "Stopword list, one per line")->check(CLI::ExistingFile);
    project->add_option("--topic", proj_cfg.topic, "Topic label (default: all documents)");
    project->add_option("--k", proj_cfg.k, "Concepts per topic")->capture_default_str();
    project->add_option("--alpha-feat", proj_cfg.alpha_feat, "Occurrence block weight")->capture_default_str();
    project->add_option("--alpha-proj", proj_cfg.projection.alpha_proj, "Main-term weight")->capture_default_str();
    project->add_option("--perplexity", proj_cfg.projection.perplexity, "t-SNE perplexity")->capture_default_str();
    project->add_option("--seed", proj_cfg.projection.seed, "Random seed")->capture_default_str();
    project->add_flag("--invert-pc", proj_cfg.projection.invert_pc, "Pin unchanged concepts hardest");
    project->add_option("--min-frame-freq", proj_cfg.min_frame_freq, "Slice frequency to join a frame")
        ->capture_default_str();
    project->add_option("--out", proj_out, "Output file (default: stdout)");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve a pipeline output directory over HTTP");
    std::string state_dir, host = "127.0.0.1", static_dir;
    int port = 8080;
    serve->add_option("--state", state_dir, "Output directory of `run`")->required()->check(CLI::ExistingDirectory);
    serve->add_option("--port", port, "Port")->capture_default_str();
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--static", static_dir, "Directory of static UI assets")->check(CLI::ExistingDirectory);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with planted structure");
    std::string kind = "burst", synth_out;
    std::uint64_t synth_seed = 1;
    synth->add_option("--kind", kind, "burst | stationary | noise")
        ->check(CLI::IsMember({"burst", "stationary", "noise"}))
        ->capture_default_str();
    synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto config = cf::PipelineConfig::load(config_path);
            auto prepared = std::make_shared<const cf::PreparedCorpus>(cf::prepare(config));
            report_rejects(*prepared);
            auto state = cf::run_pipeline(prepared);
            std::cerr << "topic '" << config.topic << "': " << prepared->corpus.size() << " documents, "
                      << prepared->concepts.size() << " concepts, " << prepared->slicing.slices.size()
                      << " slices";
            if (!config.output_dir.empty()) {
                std::cerr << "; wrote " << (config.output_dir / "rev_0").string();
            }
            std::cerr << '\n';
            if (config.output_dir.empty()) {
                std::cout << state.snapshot->layout_json << '\n';
            }
        } else if (*slice) {
            slice_cfg.corpus = slice_corpus;
            slice_cfg.stopwords = slice_stopwords;
            slice_cfg.granularity = cf::parse_duration(slice_granularity);
            slice_cfg.slicing.max_duration = static_cast<cf::Timestamp>(max_slice_days * cf::kSecondsPerDay);
            auto prepared = cf::prepare(slice_cfg);
            report_rejects(prepared);
            write_output(slice_out, cf::slice_manifest(prepared).dump(2) + "\n");
        } else if (*project) {
            proj_cfg.corpus = proj_corpus;
            proj_cfg.embeddings = proj_embeddings;
            proj_cfg.stopwords = proj_stopwords;
            proj_cfg.validate();
            auto loaded = cf::load_corpus(proj_corpus);
            cf::EmbeddingTable table;
            if (!proj_embeddings.empty()) {
                table = cf::load_embeddings(proj_embeddings);
            }
            const cf::Tokenizer tokenizer =
                proj_stopwords.empty() ? cf::Tokenizer() : cf::Tokenizer::from_file(proj_stopwords);
            auto corpus = cf::TokenizedCorpus::build(cf::filter_topic(loaded.documents, proj_cfg.topic), tokenizer);
            if (corpus.size() == 0) {
                throw cf::Error("slicing", "empty topic");
            }
            std::ifstream in(proj_slices);
            json manifest = json::parse(in);
            cf::PreparedCorpus prepared;
            prepared.config = proj_cfg;
            prepared.concepts = cf::extract_concepts(corpus.documents, {}, proj_cfg.k, tokenizer);
            const auto tokens = prepared.concept_tokens();
            prepared.slicing.slices = cf::slices_from_manifest(manifest, corpus, tokens);
            for (const auto& s : prepared.slicing.slices) {
                prepared.occurrence.push_back(cf::build_occurrence(s.docs, tokens, corpus));
            }
            prepared.embeddings = std::move(table);
            prepared.corpus = std::move(corpus);
            auto inputs = cf::frame_inputs(prepared, {});
            auto frames = cf::chain_project(inputs, proj_cfg.projection);
            write_output(proj_out, cf::frames_to_json(frames).dump(2) + "\n");
        } else if (*serve) {
            cf::Session session(cf::restore_session(state_dir));
            httplib::Server server;
            cf::mount_api(server, session, static_dir);
            g_server = &server;
            std::signal(SIGINT, [](int) {
                if (g_server != nullptr) {
                    g_server->stop();
                }
            });
            std::cerr << "serving revision " << session.current().snapshot->revision << " of " << state_dir
                      << " on http://" << host << ':' << port << '\n';
            if (!server.listen(host, port)) {
                std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
                return 1;
            }
        } else if (*synth) {
            std::vector<cf::Document> docs;
            if (kind == "burst") {
                auto corpus = cf::synthetic::burst_corpus(synth_seed);
                std::cerr << "burst " << cf::format_timestamp(corpus.burst_start) << " .. "
                          << cf::format_timestamp(corpus.burst_end) << '\n';
                docs = std::move(corpus.documents);
            } else if (kind == "stationary") {
                cf::synthetic::StreamSpec spec;
                spec.days = 101;
                spec.background_concepts = 50;
                docs = cf::synthetic::stationary_corpus(synth_seed, spec);
            } else {
                docs = cf::synthetic::noise_fixture(synth_seed).documents;
            }
            std::string out;
            for (const auto& doc : docs) {
                out += cf::serialize_document(doc);
                out += '\n';
            }
            write_output(synth_out, out);
        }
    } catch (const cf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
