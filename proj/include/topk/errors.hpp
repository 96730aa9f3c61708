#pragma once

#include <stdexcept>
#include <string>

namespace topk {

// Bad configuration or precondition violation caught before any work runs.
struct InvalidConfigError : std::runtime_error {
    explicit InvalidConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value detected in a numeric pipeline.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (CSV arity, bad IDX magic, truncated blob, ...).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A record contains a category never seen when the encoding tables were built.
struct EncodingError : std::runtime_error {
    explicit EncodingError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss.
struct DivergedTrainingError : std::runtime_error {
    DivergedTrainingError(const std::string& what, int epoch)
        : std::runtime_error(what), epoch_index(epoch) {}
    int epoch_index;
};

// Traces grouped for comparison were produced under different environments.
struct IncompatibleTracesError : std::runtime_error {
    explicit IncompatibleTracesError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace topk
