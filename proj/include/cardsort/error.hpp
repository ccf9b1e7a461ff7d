#pragma once

#include <stdexcept>
#include <string>

namespace cardsort {

// Error categories used across the library. Each maps to one failure mode
// named in the operation contracts.
enum class ErrorCode {
    parse_error,
    validation_error,
    invalid_k,
    invalid_range,
    domain_mismatch,
    empty_input,
    too_large,
    degenerate_table,
    empty_group,
    constant_input,
    dimension_mismatch,
    too_few_pairs,
    missing_covariate,
    subgroup_too_large,
    n_too_large,
    too_few_points,
    fit_diverged,
    invalid_ratio,
    no_tokens,
    unmapped_category,
    invalid_config,
    invalid_argument,
    io_error,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::validation_error: return "validation_error";
        case ErrorCode::invalid_k: return "invalid_k";
        case ErrorCode::invalid_range: return "invalid_range";
        case ErrorCode::domain_mismatch: return "domain_mismatch";
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::too_large: return "too_large";
        case ErrorCode::degenerate_table: return "degenerate_table";
        case ErrorCode::empty_group: return "empty_group";
        case ErrorCode::constant_input: return "constant_input";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::too_few_pairs: return "too_few_pairs";
        case ErrorCode::missing_covariate: return "missing_covariate";
        case ErrorCode::subgroup_too_large: return "subgroup_too_large";
        case ErrorCode::n_too_large: return "n_too_large";
        case ErrorCode::too_few_points: return "too_few_points";
        case ErrorCode::fit_diverged: return "fit_diverged";
        case ErrorCode::invalid_ratio: return "invalid_ratio";
        case ErrorCode::no_tokens: return "no_tokens";
        case ErrorCode::unmapped_category: return "unmapped_category";
        case ErrorCode::invalid_config: return "invalid_config";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace cardsort
