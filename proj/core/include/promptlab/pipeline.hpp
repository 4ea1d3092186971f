#pragma once

#include "promptlab/attack.hpp"
#include "promptlab/dataset.hpp"
#include "promptlab/engineering.hpp"
#include "promptlab/gateway.hpp"
#include "promptlab/metrics.hpp"
#include "promptlab/prompt.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptlab {

/// One (endpoint x dataset x template x method x optional attack) evaluation.
struct RunRecord {
    std::string run_id;
    std::string status = "ok"; // "ok" | "error"
    ModelEndpoint endpoint;
    std::string dataset;
    std::string dataset_kind;
    std::string template_id;
    std::string method = "none";
    std::optional<AttackConfig> attack_config;
    std::optional<AttackResult> attack_result;
    std::vector<SampleOutcome> per_sample;
    std::map<std::string, double> metrics;
    std::vector<std::string> few_shot_ids;
    std::map<std::string, std::uint64_t> seeds;
    std::string started_at;
    std::string finished_at;
    std::string error; // populated when status == "error"
};

nlohmann::json run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

/// Bundled schema checker; returns human-readable problems, empty when valid.
std::vector<std::string> validate_run_record_json(const nlohmann::json& j);

/// Recomputes the stored metrics from per_sample; returns mismatching names.
std::vector<std::string> check_metric_consistency(const RunRecord& record,
                                                  const std::vector<std::string>& label_space);

/// Declarative sweep plan: the cross-product of endpoints x datasets x
/// templates x methods x optional attacks.
struct SweepPlan {
    std::vector<ModelEndpoint> endpoints;
    std::vector<std::string> datasets;
    std::vector<std::string> template_selectors; // empty selects all builtin templates
    std::vector<std::string> methods = {"none"}; // "none" or prompt-engineering method names
    std::vector<AttackConfig> attacks;           // empty: no attack axis
    GenerationParams params;
    std::uint64_t seed = 0;
    int parallelism = 1;
    int max_records = 0; // 0: evaluate every record
    std::string run_id;
    std::filesystem::path out_dir = "runs";
};

struct SweepComponents {
    const DatasetStore* datasets;
    const TemplateLibrary* templates;
    const ModelGateway* gateway;
    const MethodRunner* methods;
    const AttackEngine* attacks;
};

/// Validates every name in the plan against the registries before any model
/// call; throws BadConfig listing the offending name.
void validate_plan(const SweepPlan& plan, const SweepComponents& components);

/// Executes the plan cell by cell. Records append to <out_dir>/<run_id>.jsonl
/// in plan order, fsynced per record; a failing cell yields an error record
/// and never aborts the sweep.
std::vector<RunRecord> run_sweep(const SweepPlan& plan, const SweepComponents& components);

/// Reads every RunRecord line from *.jsonl files under a directory.
std::vector<nlohmann::json> load_run_dir(const std::filesystem::path& dir);

} // namespace promptlab
