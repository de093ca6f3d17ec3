#pragma once

#include <stdexcept>
#include <string>

namespace rfold {

/// Invalid configuration (bad spec, bad generator parameters, bad file).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A circuit request pairs ports that do not share an OCS (wrong dimension
/// or mismatched cross-position), or names a port that is not a face port.
struct AlignmentError : std::runtime_error {
    explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A port carries a link owned by a running job and cannot be reprogrammed.
struct BusyError : std::runtime_error {
    explicit BusyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An allocation touches an XPU or link already owned by another job.
struct ExclusivityError : std::runtime_error {
    explicit ExclusivityError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A plan no longer matches the cluster state it is committed against.
struct StalePlanError : std::runtime_error {
    explicit StalePlanError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Lookup of an unknown XPU, port or job.
struct LookupError : std::runtime_error {
    explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg, long line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    long line_number;
};

}  // namespace rfold
