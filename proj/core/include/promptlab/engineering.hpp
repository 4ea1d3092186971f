#pragma once

#include "promptlab/gateway.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptlab {

enum class Method {
    cot_fewshot,
    zs_cot,
    emotion,
    expert,
    generated_knowledge,
    least_to_most,
};

Method method_from_string(const std::string& s);
std::string to_string(Method method);
std::vector<Method> all_methods();

/// Stage-shape contract: fixed_stages is the exact exchange count, or the
/// decomposition stage only when solve stages are dynamic (least_to_most).
struct MethodPlanInfo {
    Method method;
    int fixed_stages;
    bool dynamic_solve_stages;
};

MethodPlanInfo plan_for(Method method);

struct Exchange {
    std::string prompt;
    std::string response;
};

struct MethodResult {
    std::string answer; // final stage raw output; the pipeline's parser is the single parsing authority
    std::vector<Exchange> transcript;
};

/// Runs the six prompt-engineering query plans over the model gateway. All
/// fixed method strings come from one resource file (method_prompts.json).
/// Custom plans register by name and dispatch through the same entry point.
class MethodRunner {
public:
    using CustomPlan = std::function<MethodResult(const std::string& question,
                                                  const ModelEndpoint& endpoint,
                                                  const GenerationParams& params)>;

    MethodRunner(const ModelGateway& gateway, nlohmann::json method_prompts);

    MethodResult apply(Method method, const std::string& question, const ModelEndpoint& endpoint,
                       const GenerationParams& params) const;

    /// Dispatches by name: custom plans first, then the builtin six.
    MethodResult apply_named(const std::string& method, const std::string& question,
                             const ModelEndpoint& endpoint, const GenerationParams& params) const;

    void register_plan(const std::string& name, CustomPlan plan);
    bool knows(const std::string& name) const;

    std::vector<std::string> decompose(const std::string& question, const ModelEndpoint& endpoint,
                                       const GenerationParams& params) const;

    /// Numbered or bulleted lines become items; anything else nonblank is one
    /// item; blank input yields an empty list.
    static std::vector<std::string> parse_subproblems(const std::string& response);

    const nlohmann::json& prompts() const { return prompts_; }

private:
    std::string stage_text(const std::string& method, const std::string& key) const;
    std::string call(const ModelEndpoint& endpoint, const GenerationParams& params,
                     const std::string& prompt, std::vector<Exchange>& transcript) const;

    const ModelGateway* gateway_;
    nlohmann::json prompts_;
    std::map<std::string, CustomPlan> custom_plans_;
};

} // namespace promptlab
