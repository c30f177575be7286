#pragma once

#include <stdexcept>
#include <string>

namespace tobitadd {

// Malformed or unusable model inputs (dimension mismatches, bad values).
// Plain std::invalid_argument is used for precondition violations on scalar
// kernels; the types below carry model-level failure semantics.

struct InsufficientData : std::runtime_error {
    explicit InsufficientData(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateDesign : std::runtime_error {
    explicit DegenerateDesign(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateData : std::runtime_error {
    explicit DegenerateData(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidStart : std::runtime_error {
    explicit InvalidStart(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonConvergence : std::runtime_error {
    explicit NonConvergence(const std::string& msg) : std::runtime_error(msg) {}
};

struct SelectionFailure : std::runtime_error {
    explicit SelectionFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct ExperimentFailure : std::runtime_error {
    explicit ExperimentFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tobitadd
