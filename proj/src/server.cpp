#include "conceptflow/server.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include <httplib.h>

#include "conceptflow/error.hpp"

namespace conceptflow {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

void send_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), kJson);
}

json document_json(const Document& doc) {
    return {{"id", doc.id},
            {"timestamp", format_timestamp(doc.timestamp)},
            {"text", doc.text},
            {"group", doc.group},
            {"topic", doc.topic}};
}

// Digits only: std::stoul would accept "-1" and wrap it.
std::optional<std::size_t> parse_index(const std::string& text) {
    if (text.empty() || text.size() > 18 ||
        !std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(std::stoull(text));
}

}  // namespace

void mount_api(httplib::Server& server, Session& session, const std::filesystem::path& static_dir) {
    server.Get("/api/layout", [&session](const httplib::Request& req, httplib::Response& res) {
        try {
            const std::string rev = req.has_param("rev") ? req.get_param_value("rev") : "latest";
            if (rev == "latest") {
                res.set_content(session.current().snapshot->layout_json, kJson);
                return;
            }
            const auto number = parse_index(rev);
            if (!number) {
                send_error(res, 400, "rev must be 'latest' or a revision number");
                return;
            }
            res.set_content(session.layout_json(*number), kJson);
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        }
    });

    server.Post("/api/reproject", [&session](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("remove") || !body["remove"].is_array()) {
            send_error(res, 400, "body must be {\"remove\": [tokens]}");
            return;
        }
        std::set<std::string> remove;
        for (const auto& token : body["remove"]) {
            if (!token.is_string()) {
                send_error(res, 400, "remove must contain strings");
                return;
            }
            remove.insert(token.get<std::string>());
        }
        try {
            auto next = session.reproject(remove);
            res.set_content(json{{"revision", next.snapshot->revision}}.dump(), kJson);
        } catch (const NotFound& e) {
            send_error(res, 400, e.what());
        } catch (const Error& e) {
            send_error(res, 500, e.what());
        }
    });

    server.Get("/api/docs", [&session](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_param("concept") || !req.has_param("slice")) {
            send_error(res, 400, "concept and slice are required");
            return;
        }
        const auto slice = parse_index(req.get_param_value("slice"));
        if (!slice) {
            send_error(res, 400, "slice must be a non-negative integer");
            return;
        }
        try {
            json out = json::array();
            for (const auto& doc : docs_for(session.current(), req.get_param_value("concept"), *slice)) {
                out.push_back(document_json(doc));
            }
            res.set_content(out.dump(), kJson);
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        }
    });

    server.Get("/api/concepts", [&session](const httplib::Request&, httplib::Response& res) {
        const auto state = session.current();
        res.set_content(concepts_to_json(*state.prepared, *state.snapshot).dump(), kJson);
    });

    if (!static_dir.empty()) {
        server.set_mount_point("/", static_dir.string());
    }
}

}  // namespace conceptflow
