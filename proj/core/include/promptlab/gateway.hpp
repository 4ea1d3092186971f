#pragma once

#include "promptlab/registry.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

namespace promptlab {

struct GenerationParams {
    double temperature = 0.0;
    int max_new_tokens = 256;
    std::optional<std::int64_t> seed;
};

void validate_params(const GenerationParams& params);

enum class EndpointKind { openai_compatible, mock };

EndpointKind endpoint_kind_from_string(const std::string& s);
std::string to_string(EndpointKind kind);

struct ModelEndpoint {
    EndpointKind kind = EndpointKind::mock;
    std::string base_url;      // openai_compatible only
    std::string model_name;
    std::string auth_ref;      // env var NAME holding the bearer token, never the secret
    std::string mock_rulebook; // mock only
};

void validate_endpoint(const ModelEndpoint& endpoint);
nlohmann::json endpoint_to_json(const ModelEndpoint& endpoint);
ModelEndpoint endpoint_from_json(const nlohmann::json& j);

struct MockRule {
    std::string matcher;  // ECMAScript regex searched over the prompt
    std::string response; // may reference captured groups as $0..$9
};

struct MockNoise {
    double flip_probability = 0.0;
    std::vector<std::string> label_space;
};

/// Deterministic prompt -> response table. Rules fire in order; the first
/// match wins, else the fallback. With a fixed seed the response is a pure
/// function of (prompt, rulebook, seed), noise included.
class MockRulebook {
public:
    MockRulebook() = default;
    MockRulebook(std::vector<MockRule> rules, std::string fallback,
                 std::optional<MockNoise> noise = std::nullopt);

    std::string respond(const std::string& prompt, std::optional<std::int64_t> seed) const;

    static MockRulebook from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    std::vector<MockRule> rules_;
    std::vector<std::regex> compiled_;
    std::string fallback_;
    std::optional<MockNoise> noise_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
};

struct GenerationOutcome {
    bool ok = false;
    std::string text;
    std::string error_kind; // ErrorCode name when !ok
    std::string message;
};

/// Wire seam. The default transport posts with cpp-httplib; tests substitute a
/// scripted one, and setting PROMPTLAB_DENY_NETWORK refuses to construct the
/// real transport at all, which is how mock-only runs prove they never touch a
/// socket.
struct HttpReply {
    bool transport_error = false;
    int status = 0;
    std::string body;
    std::string error;
};
using TransportFn =
    std::function<HttpReply(const std::string& url, const std::string& bearer, const std::string& body)>;

struct GatewayStats {
    long mock_queries = 0;
    long remote_attempts = 0; // individual HTTP attempts, retries included
};

/// Unified text-generation interface over OpenAI-compatible endpoints and
/// local mock models. Thread-safe for concurrent generate calls.
class ModelGateway {
public:
    ModelGateway();

    GatewayStats stats() const;

    void register_rulebook(const std::string& name, MockRulebook rulebook);
    /// Loads a {"rulebooks": {name: {...}}} section in the shared config format.
    void load_rulebooks(const nlohmann::json& config);
    bool has_rulebook(const std::string& name) const { return rulebooks_.contains(name); }

    void set_retry_policy(RetryPolicy policy) { retry_ = policy; }
    const RetryPolicy& retry_policy() const { return retry_; }

    void set_transport(TransportFn transport) { transport_ = std::move(transport); }

    std::string generate(const ModelEndpoint& endpoint, const GenerationParams& params,
                         const std::string& prompt) const;

    /// Order-preserving, at most `parallelism` requests in flight; one prompt
    /// failing never aborts the batch.
    std::vector<GenerationOutcome> batch_generate(const ModelEndpoint& endpoint,
                                                  const GenerationParams& params,
                                                  const std::vector<std::string>& prompts,
                                                  int parallelism) const;

private:
    std::string generate_mock(const ModelEndpoint& endpoint, const GenerationParams& params,
                              const std::string& prompt) const;
    std::string generate_remote(const ModelEndpoint& endpoint, const GenerationParams& params,
                                const std::string& prompt) const;

    Registry<MockRulebook> rulebooks_;
    RetryPolicy retry_;
    TransportFn transport_;
    mutable std::atomic<long> mock_queries_{0};
    mutable std::atomic<long> remote_attempts_{0};
};

/// Default cpp-httplib transport; throws Transport when PROMPTLAB_DENY_NETWORK is set.
TransportFn make_default_transport();

} // namespace promptlab
