#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace flowscribe::agent {

struct ChatMessage {
    std::string role;  // user | assistant
    std::string content;
};

/// Wire request: {system, messages[], model, temperature}.
struct LLMRequest {
    std::string system;
    std::vector<ChatMessage> messages;
    std::string model;
    double temperature = 0.0;
};

nlohmann::json to_json(const LLMRequest& r);
LLMRequest llm_request_from_json(const nlohmann::json& j);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff{500};  // doubled after each failed attempt
};

struct ClientConfig {
    /// "mock" (or empty) selects the built-in deterministic client; otherwise an http(s) URL.
    std::string endpoint = "mock";
    std::string credential;
    std::string model_id = "mock";
    std::chrono::milliseconds timeout{60000};
    RetryPolicy retry;

    /// FLOWSCRIBE_LLM_URL, FLOWSCRIBE_LLM_KEY, FLOWSCRIBE_LLM_MODEL, FLOWSCRIBE_LLM_TIMEOUT_MS over `base`.
    static ClientConfig from_env(ClientConfig base);
    static ClientConfig from_env();
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Provider-agnostic contract: request in, transcript text out.
class LLMClient {
public:
    virtual ~LLMClient() = default;
    virtual std::string model_id() const = 0;
    /// Throws TransportError when the provider cannot be reached or answers with an error.
    virtual std::string complete(const LLMRequest& request) = 0;
};

/// Deterministic client. With a script it replies with the scripted transcripts in order and repeats
/// the last one. Without a script it answers from the examples in the request (exact prompt match) or
/// from a small table of shape keywords.
class MockClient : public LLMClient {
public:
    explicit MockClient(std::vector<std::string> script = {}, std::string model_id = "mock");

    std::string model_id() const override { return model_id_; }
    std::string complete(const LLMRequest& request) override;

    std::size_t calls() const;
    std::vector<LLMRequest> requests() const;

private:
    std::vector<std::string> script_;
    std::string model_id_;
    mutable std::mutex mu_;
    std::vector<LLMRequest> seen_;
};

/// Rule-based answer used by the unscripted mock.
std::string mock_transcript(const std::string& user_message);

/// POSTs the wire request as JSON and reads {"text": ...}; retries transport failures, 429 and 5xx.
class HttpClient : public LLMClient {
public:
    explicit HttpClient(ClientConfig cfg);

    std::string model_id() const override { return cfg_.model_id; }
    std::string complete(const LLMRequest& request) override;

private:
    ClientConfig cfg_;
    std::string base_, path_;
};

std::unique_ptr<LLMClient> make_client(const ClientConfig& cfg);

}  // namespace flowscribe::agent
