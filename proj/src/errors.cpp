// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/errors.hpp"

namespace s3m {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Range: return "range";
        case ErrorKind::Dimension: return "dimension";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::Label: return "label";
        case ErrorKind::Configuration: return "configuration";
        case ErrorKind::UndefinedLoss: return "undefined-loss";
        case ErrorKind::UndefinedMetrics: return "undefined-metrics";
        case ErrorKind::Data: return "data";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Io: return "io";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Usage: return "usage";
    }
    return "unknown";
}

}  // namespace s3m
