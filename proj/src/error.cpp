#include "rct/error.hpp"

namespace rct {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_config: return "InvalidConfig";
        case ErrorKind::io_error: return "IoError";
        case ErrorKind::missing_column: return "MissingColumn";
        case ErrorKind::non_binary_arm: return "NonBinaryArm";
        case ErrorKind::empty_arm: return "EmptyArm";
        case ErrorKind::parse_failure: return "ParseFailure";
        case ErrorKind::scale_outcome_mismatch: return "ScaleOutcomeMismatch";
        case ErrorKind::all_missing_column: return "AllMissingColumn";
        case ErrorKind::rank_deficient_design: return "RankDeficientDesign";
        case ErrorKind::separation: return "Separation";
        case ErrorKind::non_convergence: return "NonConvergence";
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::degenerate_randomization: return "DegenerateRandomization";
        case ErrorKind::boundary_estimate: return "BoundaryEstimate";
        case ErrorKind::insufficient_complete_cases: return "InsufficientCompleteCases";
        case ErrorKind::positivity_violation: return "PositivityViolation";
        case ErrorKind::too_few_patients: return "TooFewPatients";
        case ErrorKind::excessive_failures: return "ExcessiveFailures";
        case ErrorKind::zero_standard_error: return "ZeroStandardError";
    }
    return "UnknownError";
}

ErrorCategory error_category(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_config:
        case ErrorKind::io_error:
        case ErrorKind::scale_outcome_mismatch:
            return ErrorCategory::config;
        case ErrorKind::missing_column:
        case ErrorKind::non_binary_arm:
        case ErrorKind::empty_arm:
        case ErrorKind::parse_failure:
        case ErrorKind::all_missing_column:
            return ErrorCategory::data;
        case ErrorKind::rank_deficient_design:
        case ErrorKind::separation:
        case ErrorKind::non_convergence:
        case ErrorKind::dimension_mismatch:
        case ErrorKind::degenerate_randomization:
        case ErrorKind::boundary_estimate:
        case ErrorKind::insufficient_complete_cases:
        case ErrorKind::positivity_violation:
            return ErrorCategory::estimation;
        case ErrorKind::too_few_patients:
        case ErrorKind::excessive_failures:
        case ErrorKind::zero_standard_error:
            return ErrorCategory::inference;
    }
    return ErrorCategory::config;
}

}  // namespace rct
