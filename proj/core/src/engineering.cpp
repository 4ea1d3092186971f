#include "promptlab/engineering.hpp"

#include "promptlab/errors.hpp"

#include <cctype>
#include <sstream>

namespace promptlab {

Method method_from_string(const std::string& s) {
    if (s == "cot_fewshot") return Method::cot_fewshot;
    if (s == "zs_cot") return Method::zs_cot;
    if (s == "emotion") return Method::emotion;
    if (s == "expert") return Method::expert;
    if (s == "generated_knowledge") return Method::generated_knowledge;
    if (s == "least_to_most") return Method::least_to_most;
    throw Error(ErrorCode::unknown_method, "'" + s + "'");
}

std::string to_string(Method method) {
    switch (method) {
        case Method::cot_fewshot: return "cot_fewshot";
        case Method::zs_cot: return "zs_cot";
        case Method::emotion: return "emotion";
        case Method::expert: return "expert";
        case Method::generated_knowledge: return "generated_knowledge";
        case Method::least_to_most: return "least_to_most";
    }
    return "zs_cot";
}

std::vector<Method> all_methods() {
    return {Method::cot_fewshot, Method::zs_cot,  Method::emotion,
            Method::expert,      Method::generated_knowledge, Method::least_to_most};
}

MethodPlanInfo plan_for(Method method) {
    switch (method) {
        case Method::cot_fewshot: return {method, 1, false};
        case Method::zs_cot: return {method, 1, false};
        case Method::emotion: return {method, 1, false};
        case Method::expert: return {method, 2, false};
        case Method::generated_knowledge: return {method, 2, false};
        case Method::least_to_most: return {method, 1, true};
    }
    return {method, 1, false};
}

MethodRunner::MethodRunner(const ModelGateway& gateway, nlohmann::json method_prompts)
    : gateway_(&gateway), prompts_(std::move(method_prompts)) {}

void MethodRunner::register_plan(const std::string& name, CustomPlan plan) {
    custom_plans_.insert_or_assign(name, std::move(plan));
}

bool MethodRunner::knows(const std::string& name) const {
    if (custom_plans_.count(name) != 0) return true;
    try {
        method_from_string(name);
        return true;
    } catch (const Error&) {
        return false;
    }
}

MethodResult MethodRunner::apply_named(const std::string& method, const std::string& question,
                                       const ModelEndpoint& endpoint,
                                       const GenerationParams& params) const {
    auto it = custom_plans_.find(method);
    if (it != custom_plans_.end()) {
        return it->second(question, endpoint, params);
    }
    return apply(method_from_string(method), question, endpoint, params);
}

std::string MethodRunner::stage_text(const std::string& method, const std::string& key) const {
    try {
        return prompts_.at(method).at(key).get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::bad_config,
                    "method_prompts missing entry " + method + "." + key);
    }
}

std::string MethodRunner::call(const ModelEndpoint& endpoint, const GenerationParams& params,
                               const std::string& prompt, std::vector<Exchange>& transcript) const {
    try {
        std::string response = gateway_->generate(endpoint, params, prompt);
        transcript.push_back({prompt, response});
        return response;
    } catch (const Error& e) {
        throw Error(ErrorCode::stage_failure,
                    "stage " + std::to_string(transcript.size() + 1) + " failed: " + e.what());
    }
}

std::vector<std::string> MethodRunner::parse_subproblems(const std::string& response) {
    std::vector<std::string> items;
    std::istringstream in(response);
    std::string line;
    bool any_nonblank = false;
    while (std::getline(in, line)) {
        std::size_t i = 0;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t end = line.size();
        while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
        if (end <= i) continue;
        any_nonblank = true;
        std::string_view body(line.data() + i, end - i);

        // strip "1." / "2)" / "3:" / "-" / "*" list markers
        std::size_t j = 0;
        while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j]))) ++j;
        if (j > 0 && j < body.size() && (body[j] == '.' || body[j] == ')' || body[j] == ':')) {
            ++j;
        } else if (body[0] == '-' || body[0] == '*') {
            j = 1;
        } else {
            j = 0;
        }
        while (j < body.size() && body[j] == ' ') ++j;
        if (j > 0 && j < body.size()) {
            items.emplace_back(body.substr(j));
        }
    }
    if (items.empty() && any_nonblank) {
        // no recognizable list: the whole response is one subproblem
        std::string whole = response;
        const auto first = whole.find_first_not_of(" \t\r\n");
        const auto last = whole.find_last_not_of(" \t\r\n");
        items.push_back(whole.substr(first, last - first + 1));
    }
    return items;
}

std::vector<std::string> MethodRunner::decompose(const std::string& question,
                                                 const ModelEndpoint& endpoint,
                                                 const GenerationParams& params) const {
    std::vector<Exchange> transcript;
    const std::string prompt = stage_text("least_to_most", "decompose_prefix") + question +
                               stage_text("least_to_most", "decompose_suffix");
    const std::string response = call(endpoint, params, prompt, transcript);
    std::vector<std::string> subproblems = parse_subproblems(response);
    if (subproblems.empty()) {
        throw Error(ErrorCode::decomposition_empty, "model produced no subproblems");
    }
    return subproblems;
}

MethodResult MethodRunner::apply(Method method, const std::string& question,
                                 const ModelEndpoint& endpoint,
                                 const GenerationParams& params) const {
    MethodResult result;
    switch (method) {
        case Method::zs_cot: {
            const std::string prompt = question + "\n" + stage_text("zs_cot", "suffix");
            result.answer = call(endpoint, params, prompt, result.transcript);
            return result;
        }
        case Method::emotion: {
            const std::string prompt = question + " " + stage_text("emotion", "suffix");
            result.answer = call(endpoint, params, prompt, result.transcript);
            return result;
        }
        case Method::cot_fewshot: {
            // exemplar count follows the configured shots
            std::string block;
            try {
                const nlohmann::json& exemplars = prompts_.at("cot_fewshot").at("exemplars");
                const std::size_t shots = prompts_.at("cot_fewshot").value(
                    "shots", static_cast<int>(exemplars.size()));
                for (std::size_t i = 0; i < std::min<std::size_t>(shots, exemplars.size()); ++i) {
                    block += exemplars[i].get<std::string>() + "\n";
                }
            } catch (const nlohmann::json::exception&) {
                throw Error(ErrorCode::bad_config, "method_prompts missing cot_fewshot.exemplars");
            }
            const std::string prompt = block + "Q: " + question + "\nA:";
            result.answer = call(endpoint, params, prompt, result.transcript);
            return result;
        }
        case Method::expert: {
            const std::string identity_prompt = stage_text("expert", "identity_exemplars") +
                                                "\nInstruction: " + question +
                                                "\nExpert identity:";
            const std::string identity = call(endpoint, params, identity_prompt, result.transcript);
            // stage-1 response becomes the identity preamble, verbatim
            const std::string answer_prompt =
                identity + "\n\n" + stage_text("expert", "answer_instruction") + "\n" + question;
            result.answer = call(endpoint, params, answer_prompt, result.transcript);
            return result;
        }
        case Method::generated_knowledge: {
            const std::string elicit_prompt =
                stage_text("generated_knowledge", "elicit_prefix") + question;
            const std::string knowledge = call(endpoint, params, elicit_prompt, result.transcript);
            // generated knowledge feeds the answer stage verbatim, before the question
            const std::string answer_prompt = stage_text("generated_knowledge", "answer_prefix") +
                                              knowledge + "\n\n" + question;
            result.answer = call(endpoint, params, answer_prompt, result.transcript);
            return result;
        }
        case Method::least_to_most: {
            const std::string decompose_prompt = stage_text("least_to_most", "decompose_prefix") +
                                                 question +
                                                 stage_text("least_to_most", "decompose_suffix");
            const std::string response = call(endpoint, params, decompose_prompt, result.transcript);
            const std::vector<std::string> subproblems = parse_subproblems(response);
            if (subproblems.empty()) {
                throw Error(ErrorCode::decomposition_empty, "model produced no subproblems");
            }
            // each solve prompt carries the original problem and every pair solved so far
            std::string solved_context;
            for (const std::string& sub : subproblems) {
                std::string prompt = stage_text("least_to_most", "solve_prefix") + question + "\n";
                if (!solved_context.empty()) prompt += solved_context;
                prompt += "Q: " + sub + "\nA:";
                const std::string answer = call(endpoint, params, prompt, result.transcript);
                solved_context += "Q: " + sub + "\nA: " + answer + "\n";
                result.answer = answer;
            }
            return result;
        }
    }
    throw Error(ErrorCode::unknown_method, "unhandled method");
}

} // namespace promptlab
