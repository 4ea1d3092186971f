#include "promptlab/gateway.hpp"

#include "promptlab/errors.hpp"
#include "promptlab/rng.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace promptlab {

void validate_params(const GenerationParams& params) {
    if (params.temperature < 0.0) {
        throw Error(ErrorCode::bad_config, "temperature must be >= 0");
    }
    if (params.max_new_tokens < 1) {
        throw Error(ErrorCode::bad_config, "max_new_tokens must be >= 1");
    }
}

EndpointKind endpoint_kind_from_string(const std::string& s) {
    if (s == "openai_compatible") return EndpointKind::openai_compatible;
    if (s == "mock") return EndpointKind::mock;
    throw Error(ErrorCode::bad_config, "unknown endpoint kind '" + s + "'");
}

std::string to_string(EndpointKind kind) {
    return kind == EndpointKind::openai_compatible ? "openai_compatible" : "mock";
}

void validate_endpoint(const ModelEndpoint& endpoint) {
    if (endpoint.model_name.empty()) {
        throw Error(ErrorCode::bad_config, "endpoint model_name empty");
    }
    if (endpoint.kind == EndpointKind::openai_compatible && endpoint.base_url.empty()) {
        throw Error(ErrorCode::bad_config, "openai_compatible endpoint needs base_url");
    }
    if (endpoint.kind == EndpointKind::mock && endpoint.mock_rulebook.empty()) {
        throw Error(ErrorCode::bad_config, "mock endpoint needs mock_rulebook");
    }
}

nlohmann::json endpoint_to_json(const ModelEndpoint& endpoint) {
    nlohmann::json j{{"kind", to_string(endpoint.kind)}, {"model_name", endpoint.model_name}};
    if (!endpoint.base_url.empty()) j["base_url"] = endpoint.base_url;
    if (!endpoint.auth_ref.empty()) j["auth_ref"] = endpoint.auth_ref;
    if (!endpoint.mock_rulebook.empty()) j["mock_rulebook"] = endpoint.mock_rulebook;
    return j;
}

ModelEndpoint endpoint_from_json(const nlohmann::json& j) {
    ModelEndpoint e;
    e.kind = endpoint_kind_from_string(j.at("kind").get<std::string>());
    e.model_name = j.at("model_name").get<std::string>();
    e.base_url = j.value("base_url", "");
    e.auth_ref = j.value("auth_ref", "");
    e.mock_rulebook = j.value("mock_rulebook", "");
    validate_endpoint(e);
    return e;
}

MockRulebook::MockRulebook(std::vector<MockRule> rules, std::string fallback,
                           std::optional<MockNoise> noise)
    : rules_(std::move(rules)), fallback_(std::move(fallback)), noise_(std::move(noise)) {
    compiled_.reserve(rules_.size());
    for (const MockRule& rule : rules_) {
        try {
            compiled_.emplace_back(rule.matcher, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
            throw Error(ErrorCode::bad_config, "rulebook matcher '" + rule.matcher + "': " + e.what());
        }
    }
    if (noise_) {
        if (noise_->flip_probability < 0.0 || noise_->flip_probability > 1.0) {
            throw Error(ErrorCode::bad_config, "flip_probability outside [0,1]");
        }
        if (noise_->label_space.empty()) {
            throw Error(ErrorCode::bad_config, "noise needs a label_space");
        }
    }
}

namespace {

// $0..$9 reference capture groups, $$ is a literal dollar.
std::string expand_response(const std::string& tpl, const std::smatch& match) {
    std::string out;
    out.reserve(tpl.size());
    for (std::size_t i = 0; i < tpl.size(); ++i) {
        if (tpl[i] == '$' && i + 1 < tpl.size()) {
            const char c = tpl[i + 1];
            if (c == '$') {
                out.push_back('$');
                ++i;
                continue;
            }
            if (c >= '0' && c <= '9') {
                const std::size_t group = static_cast<std::size_t>(c - '0');
                if (group < match.size()) out.append(match[group].str());
                ++i;
                continue;
            }
        }
        out.push_back(tpl[i]);
    }
    return out;
}

} // namespace

std::string MockRulebook::respond(const std::string& prompt, std::optional<std::int64_t> seed) const {
    std::string response = fallback_;
    for (std::size_t i = 0; i < compiled_.size(); ++i) {
        std::smatch match;
        if (std::regex_search(prompt, match, compiled_[i])) {
            response = expand_response(rules_[i].response, match);
            break;
        }
    }
    if (noise_ && noise_->flip_probability > 0.0) {
        // flip decision derived from (seed, prompt) so batch and single-shot
        // generation agree and reruns reproduce the same accuracy
        Rng rng(mix_seed({static_cast<std::uint64_t>(seed.value_or(0)), fnv1a(prompt),
                          0x6e6f697365ULL}));
        if (rng.chance(noise_->flip_probability)) {
            const auto& labels = noise_->label_space;
            auto current = std::find(labels.begin(), labels.end(), response);
            if (current != labels.end() && labels.size() > 1) {
                const std::size_t offset = 1 + rng.below(labels.size() - 1);
                response = labels[(static_cast<std::size_t>(current - labels.begin()) + offset) %
                                  labels.size()];
            }
        }
    }
    return response;
}

MockRulebook MockRulebook::from_json(const nlohmann::json& j) {
    std::vector<MockRule> rules;
    for (const nlohmann::json& r : j.value("rules", nlohmann::json::array())) {
        rules.push_back({r.at("matcher").get<std::string>(), r.at("response").get<std::string>()});
    }
    std::optional<MockNoise> noise;
    if (j.contains("noise") && !j["noise"].is_null()) {
        MockNoise n;
        n.flip_probability = j["noise"].at("flip_probability").get<double>();
        n.label_space = j["noise"].at("label_space").get<std::vector<std::string>>();
        noise = std::move(n);
    }
    return MockRulebook(std::move(rules), j.at("fallback").get<std::string>(), std::move(noise));
}

nlohmann::json MockRulebook::to_json() const {
    nlohmann::json rules = nlohmann::json::array();
    for (const MockRule& r : rules_) {
        rules.push_back({{"matcher", r.matcher}, {"response", r.response}});
    }
    nlohmann::json j{{"rules", rules}, {"fallback", fallback_}};
    if (noise_) {
        j["noise"] = {{"flip_probability", noise_->flip_probability},
                      {"label_space", noise_->label_space}};
    }
    return j;
}

TransportFn make_default_transport() {
    return [](const std::string& url, const std::string& bearer, const std::string& body) -> HttpReply {
        if (const char* deny = std::getenv("PROMPTLAB_DENY_NETWORK");
            deny != nullptr && *deny != '\0') {
            throw Error(ErrorCode::transport, "network disabled by PROMPTLAB_DENY_NETWORK");
        }
        const std::size_t scheme = url.find("://");
        const std::size_t path_pos = scheme == std::string::npos
                                         ? url.find('/')
                                         : url.find('/', scheme + 3);
        const std::string host = path_pos == std::string::npos ? url : url.substr(0, path_pos);
        const std::string path = path_pos == std::string::npos ? "/" : url.substr(path_pos);

        httplib::Client client(host);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(60, 0);
        httplib::Headers headers;
        if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            return {true, 0, "", httplib::to_string(res.error())};
        }
        return {false, res->status, res->body, ""};
    };
}

ModelGateway::ModelGateway() : transport_(make_default_transport()) {}

GatewayStats ModelGateway::stats() const {
    return GatewayStats{mock_queries_.load(), remote_attempts_.load()};
}

void ModelGateway::register_rulebook(const std::string& name, MockRulebook rulebook) {
    rulebooks_.add(name, std::move(rulebook));
}

void ModelGateway::load_rulebooks(const nlohmann::json& config) {
    if (!config.contains("rulebooks")) return;
    for (const auto& [name, spec] : config["rulebooks"].items()) {
        register_rulebook(name, MockRulebook::from_json(spec));
    }
}

std::string ModelGateway::generate(const ModelEndpoint& endpoint, const GenerationParams& params,
                                   const std::string& prompt) const {
    validate_endpoint(endpoint);
    validate_params(params);
    if (endpoint.kind == EndpointKind::mock) {
        return generate_mock(endpoint, params, prompt);
    }
    return generate_remote(endpoint, params, prompt);
}

std::string ModelGateway::generate_mock(const ModelEndpoint& endpoint,
                                        const GenerationParams& params,
                                        const std::string& prompt) const {
    const MockRulebook* rulebook = rulebooks_.find(endpoint.mock_rulebook);
    if (rulebook == nullptr) {
        throw Error(ErrorCode::bad_config,
                    "mock rulebook '" + endpoint.mock_rulebook + "' not registered");
    }
    mock_queries_.fetch_add(1, std::memory_order_relaxed);
    return rulebook->respond(prompt, params.seed);
}

std::string ModelGateway::generate_remote(const ModelEndpoint& endpoint,
                                          const GenerationParams& params,
                                          const std::string& prompt) const {
    std::string bearer;
    if (!endpoint.auth_ref.empty()) {
        const char* key = std::getenv(endpoint.auth_ref.c_str());
        if (key == nullptr || *key == '\0') {
            throw Error(ErrorCode::auth_missing, "env var '" + endpoint.auth_ref + "' is unset");
        }
        bearer = key;
    }

    nlohmann::json body{{"model", endpoint.model_name},
                        {"messages", nlohmann::json::array({nlohmann::json{
                                         {"role", "user"}, {"content", prompt}}})},
                        {"temperature", params.temperature},
                        {"max_tokens", params.max_new_tokens}};
    if (params.seed) body["seed"] = *params.seed;

    const std::string url = endpoint.base_url + "/v1/chat/completions";
    const std::string payload = body.dump();

    HttpReply reply;
    auto delay = retry_.base_delay;
    for (int attempt = 0;; ++attempt) {
        remote_attempts_.fetch_add(1, std::memory_order_relaxed);
        reply = transport_(url, bearer, payload);
        const bool retryable = reply.transport_error || reply.status == 429 || reply.status >= 500;
        if (!retryable || attempt >= retry_.max_retries) break;
        std::this_thread::sleep_for(delay);
        delay = std::chrono::milliseconds(
            static_cast<std::int64_t>(static_cast<double>(delay.count()) * retry_.factor));
    }

    if (reply.transport_error) {
        throw Error(ErrorCode::transport, "request to " + url + " failed: " + reply.error);
    }
    if (reply.status == 429) {
        throw Error(ErrorCode::rate_limited, "429 persisted past the backoff schedule");
    }
    if (reply.status != 200) {
        throw Error(ErrorCode::transport, "HTTP " + std::to_string(reply.status) + " from " + url);
    }

    try {
        const nlohmann::json parsed = nlohmann::json::parse(reply.body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_response,
                    std::string("body fails the chat-completions schema: ") + e.what());
    }
}

std::vector<GenerationOutcome> ModelGateway::batch_generate(const ModelEndpoint& endpoint,
                                                            const GenerationParams& params,
                                                            const std::vector<std::string>& prompts,
                                                            int parallelism) const {
    if (parallelism < 1) {
        throw Error(ErrorCode::bad_config, "parallelism must be >= 1");
    }
    std::vector<GenerationOutcome> results(prompts.size());
    if (prompts.empty()) return results;

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= prompts.size()) return;
            try {
                results[i] = {true, generate(endpoint, params, prompts[i]), "", ""};
            } catch (const Error& e) {
                results[i] = {false, "", to_string(e.code()), e.what()};
            } catch (const std::exception& e) {
                results[i] = {false, "", to_string(ErrorCode::transport), e.what()};
            }
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(parallelism), prompts.size());
    if (n_threads <= 1) {
        worker();
        return results;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return results;
}

} // namespace promptlab
