#pragma once

#include <stdexcept>
#include <string>

namespace slr {

// Error taxonomy shared by the library and the CLI. The CLI maps each class
// to a distinct process exit code (see tools/).

// Malformed input files: missing fields, non-numeric entries, shape mismatch.
struct IngestionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments detected before any computation.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Statistically infeasible request: n too small for the model dimension,
// cleaning without residual degrees of freedom, degenerate splits.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: singular systems at lambda = 0, non-finite objectives.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace slr
