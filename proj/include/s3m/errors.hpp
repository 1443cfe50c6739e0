// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace s3m {

/// Error categories surfaced by the library. The CLI maps them onto exit codes
/// and message prefixes.
enum class ErrorKind {
    Range,
    Dimension,
    NotFound,
    Consistency,
    Label,
    Configuration,
    UndefinedLoss,
    UndefinedMetrics,
    Data,
    Contract,
    Io,
    Divergence,
    Usage,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace s3m
