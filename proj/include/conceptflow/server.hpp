#pragma once

#include <filesystem>

#include "conceptflow/pipeline.hpp"

namespace httplib {
class Server;
}

namespace conceptflow {

/// Registers the JSON API on `server`:
///   GET  /api/layout?rev=latest|N   layout JSON of a revision
///   POST /api/reproject             {"remove": [...]} -> {"revision": N}
///   GET  /api/docs?concept=&slice=  documents of a slice containing a concept
///   GET  /api/concepts              current vocabulary with importance
/// Static files under `static_dir`, if given, are served from "/".
void mount_api(httplib::Server& server, Session& session, const std::filesystem::path& static_dir = {});

}  // namespace conceptflow
