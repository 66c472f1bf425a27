#pragma once

#include <stdexcept>
#include <string>

namespace rct {

// Error taxonomy. The category drives the CLI exit code: config errors
// exit 1, data errors 2, estimation errors 3, inference errors 4.
enum class ErrorKind {
    // config / input plumbing
    invalid_config,
    io_error,
    // data validation
    missing_column,
    non_binary_arm,
    empty_arm,
    parse_failure,
    scale_outcome_mismatch,
    all_missing_column,
    // model fitting / estimation
    rank_deficient_design,
    separation,
    non_convergence,
    dimension_mismatch,
    degenerate_randomization,
    boundary_estimate,
    insufficient_complete_cases,
    positivity_violation,
    // inference
    too_few_patients,
    excessive_failures,
    zero_standard_error,
};

enum class ErrorCategory { config = 1, data = 2, estimation = 3, inference = 4 };

const char* error_kind_name(ErrorKind kind);
ErrorCategory error_category(ErrorKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    ErrorCategory category() const { return error_category(kind_); }

  private:
    ErrorKind kind_;
};

}  // namespace rct
