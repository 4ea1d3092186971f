#pragma once

#include <stdexcept>
#include <string>

namespace promptlab {

enum class ErrorCode {
    // model gateway
    auth_missing,
    transport,
    rate_limited,
    malformed_response,
    // dataset store
    unknown_dataset,
    schema_violation,
    insufficient_records,
    // prompt factory
    shot_mismatch,
    missing_field,
    bad_template,
    // prompt engineering
    unknown_method,
    stage_failure,
    decomposition_empty,
    // attack engine
    invalid_position,
    no_attackable_words,
    budget_too_small,
    unknown_provider,
    style_table_missing,
    // dynamic generation
    generation_exhausted,
    cyclic_graph,
    arity_violation,
    singular_system,
    // pipeline / cli
    empty_run,
    bad_config,
    io_error,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying a typed error code alongside its message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace promptlab
