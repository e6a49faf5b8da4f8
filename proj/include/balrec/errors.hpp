#pragma once

#include <stdexcept>
#include <string>

namespace balrec {

// Error taxonomy shared by the library and the CLI. The CLI maps these to its
// exit-code contract: config/input/contract errors -> 2, numeric failures -> 3,
// infeasible balance problems -> 4.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition or call-contract violation (programmer-facing).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite intermediate value; message names the offending sample/step.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested moment target lies outside the achievable interval.
struct FeasibilityError : std::runtime_error {
    FeasibilityError(const std::string& msg, double lo, double hi)
        : std::runtime_error(msg), achievable_lo(lo), achievable_hi(hi) {}
    double achievable_lo;
    double achievable_hi;
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, double res)
        : std::runtime_error(msg), residual(res) {}
    double residual;
};

// Metric undefined on the given data (e.g. AUC with single-class labels).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace balrec
