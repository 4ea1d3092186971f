#pragma once

#include "promptlab/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace promptlab {

/// Everything a CLI run needs, resolved from one config file plus flag
/// overrides. Validation is all-or-nothing before any model call.
struct RunConfig {
    SweepPlan plan;
    nlohmann::json rulebooks; // {"rulebooks": {...}} section, verbatim
    std::filesystem::path data_root;
    std::optional<RetryPolicy> retry; // overrides the gateway default schedule
};

/// Parses the shared config format. Recognized keys:
///   run_id, out_dir, seed, parallelism, max_records, data_root,
///   params{temperature,max_new_tokens,seed}, endpoints[], rulebooks{},
///   datasets[], templates[], methods[], attacks[],
///   retry{max_retries,base_delay_ms,factor}
RunConfig parse_run_config(const nlohmann::json& config);

RunConfig load_run_config(const std::filesystem::path& path);

} // namespace promptlab
