#pragma once

#include <stdexcept>
#include <string>

namespace conceptflow {

/// Base error for every failure raised by the library. The `stage` names the
/// pipeline step that failed ("ingest", "slicing", ...) so that callers can
/// report "stage: cause" without string parsing.
class Error : public std::runtime_error {
public:
    Error(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

/// Raised for lookups of unknown concepts, slices or revisions.
class NotFound : public Error {
public:
    using Error::Error;
};

}  // namespace conceptflow
