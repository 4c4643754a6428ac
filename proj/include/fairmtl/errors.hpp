#pragma once
// Error taxonomy shared by all fairmtl modules. Every failure carries a
// stable code so library callers can branch on the condition and the CLI
// can map it to an exit class (2 = config/usage, 3 = data, 4 = numerical).

#include <stdexcept>
#include <string>

namespace fairmtl {

enum class errc {
    // configuration / usage
    invalid_config,
    invalid_probability,
    invalid_threshold,
    not_fitted,
    shape_error,
    // data
    empty_sample,
    empty_input,
    invalid_value,
    insufficient_group_data,
    insufficient_groups,
    unknown_group,
    degenerate_labels,
    length_mismatch,
    no_labels,
    schema_error,
    parse_error,
    stratification_error,
    io_error,
    // numerics
    numerical_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_config: return "invalid_config";
        case errc::invalid_probability: return "invalid_probability";
        case errc::invalid_threshold: return "invalid_threshold";
        case errc::not_fitted: return "not_fitted";
        case errc::shape_error: return "shape_error";
        case errc::empty_sample: return "empty_sample";
        case errc::empty_input: return "empty_input";
        case errc::invalid_value: return "invalid_value";
        case errc::insufficient_group_data: return "insufficient_group_data";
        case errc::insufficient_groups: return "insufficient_groups";
        case errc::unknown_group: return "unknown_group";
        case errc::degenerate_labels: return "degenerate_labels";
        case errc::length_mismatch: return "length_mismatch";
        case errc::no_labels: return "no_labels";
        case errc::schema_error: return "schema_error";
        case errc::parse_error: return "parse_error";
        case errc::stratification_error: return "stratification_error";
        case errc::io_error: return "io_error";
        case errc::numerical_error: return "numerical_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    errc code() const noexcept { return code_; }

    int exit_code() const noexcept {
        switch (code_) {
            case errc::invalid_config:
            case errc::invalid_probability:
            case errc::invalid_threshold:
            case errc::not_fitted:
            case errc::shape_error:
                return 2;
            case errc::numerical_error:
                return 4;
            default:
                return 3;
        }
    }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace fairmtl
