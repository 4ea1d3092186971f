#include "promptlab/errors.hpp"

namespace promptlab {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::auth_missing: return "AuthMissing";
        case ErrorCode::transport: return "Transport";
        case ErrorCode::rate_limited: return "RateLimited";
        case ErrorCode::malformed_response: return "MalformedResponse";
        case ErrorCode::unknown_dataset: return "UnknownDataset";
        case ErrorCode::schema_violation: return "SchemaViolation";
        case ErrorCode::insufficient_records: return "InsufficientRecords";
        case ErrorCode::shot_mismatch: return "ShotMismatch";
        case ErrorCode::missing_field: return "MissingField";
        case ErrorCode::bad_template: return "BadTemplate";
        case ErrorCode::unknown_method: return "UnknownMethod";
        case ErrorCode::stage_failure: return "StageFailure";
        case ErrorCode::decomposition_empty: return "DecompositionEmpty";
        case ErrorCode::invalid_position: return "InvalidPosition";
        case ErrorCode::no_attackable_words: return "NoAttackableWords";
        case ErrorCode::budget_too_small: return "BudgetTooSmall";
        case ErrorCode::unknown_provider: return "UnknownProvider";
        case ErrorCode::style_table_missing: return "StyleTableMissing";
        case ErrorCode::generation_exhausted: return "GenerationExhausted";
        case ErrorCode::cyclic_graph: return "CyclicGraph";
        case ErrorCode::arity_violation: return "ArityViolation";
        case ErrorCode::singular_system: return "SingularSystem";
        case ErrorCode::empty_run: return "EmptyRun";
        case ErrorCode::bad_config: return "BadConfig";
        case ErrorCode::io_error: return "IoError";
    }
    return "UnknownError";
}

} // namespace promptlab
