#include "promptlab/runconfig.hpp"

#include "promptlab/config.hpp"
#include "promptlab/errors.hpp"

namespace promptlab {

RunConfig parse_run_config(const nlohmann::json& config) {
    RunConfig rc;
    SweepPlan& plan = rc.plan;
    try {
        plan.run_id = config.value("run_id", "");
        plan.out_dir = config.value("out_dir", std::string("runs"));
        plan.seed = config.value("seed", std::uint64_t{0});
        plan.parallelism = config.value("parallelism", 1);
        plan.max_records = config.value("max_records", 0);
        rc.data_root = config.value("data_root", std::string(""));

        if (config.contains("params")) {
            const nlohmann::json& p = config["params"];
            plan.params.temperature = p.value("temperature", 0.0);
            plan.params.max_new_tokens = p.value("max_new_tokens", 256);
            if (p.contains("seed") && !p["seed"].is_null()) {
                plan.params.seed = p["seed"].get<std::int64_t>();
            }
        }
        validate_params(plan.params);

        for (const nlohmann::json& e : config.value("endpoints", nlohmann::json::array())) {
            plan.endpoints.push_back(endpoint_from_json(e));
        }
        plan.datasets = config.value("datasets", std::vector<std::string>{});
        plan.template_selectors = config.value("templates", std::vector<std::string>{});
        plan.methods = config.value("methods", std::vector<std::string>{"none"});
        for (const nlohmann::json& a : config.value("attacks", nlohmann::json::array())) {
            plan.attacks.push_back(attack_config_from_json(a));
        }
        if (config.contains("rulebooks")) {
            rc.rulebooks = nlohmann::json{{"rulebooks", config["rulebooks"]}};
        }
        if (config.contains("retry")) {
            const nlohmann::json& r = config["retry"];
            RetryPolicy policy;
            policy.max_retries = r.value("max_retries", policy.max_retries);
            policy.base_delay = std::chrono::milliseconds(
                r.value("base_delay_ms", static_cast<std::int64_t>(policy.base_delay.count())));
            policy.factor = r.value("factor", policy.factor);
            if (policy.max_retries < 0 || policy.factor < 1.0) {
                throw Error(ErrorCode::bad_config, "invalid retry policy");
            }
            rc.retry = policy;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::bad_config, std::string("config: ") + e.what());
    }
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(load_config_file(path));
}

} // namespace promptlab
