#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/agent/client.hpp"
#include "flowscribe/gateway/config.hpp"

namespace flowscribe::gateway {

using Logger = std::function<void(const std::string&)>;
void log_to_stderr(const std::string& line);

/// HTTP + server-sent-events front end over sessions, synthesis, runs and the catalogue.
/// Runs execute on their own worker threads and stream one frame per cycle.
class Gateway {
public:
    /// Opens (or creates) the catalogue and checks the LUT. `client` defaults to make_client(cfg.llm).
    explicit Gateway(GatewayConfig cfg, std::unique_ptr<agent::LLMClient> client = nullptr,
                     Logger log = log_to_stderr);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds the listening socket; returns the bound port. Throws on bind failure.
    int bind();
    /// Serves until stop(). Binds first if needed.
    void serve();
    /// bind() and serve() on a background thread.
    int start();
    /// Cancels live runs, finishes their archives, ends event streams and stops listening.
    void stop();

    int port() const;
    const GatewayConfig& config() const;
    /// Warnings from opening the catalogue (skipped corrupt lines).
    std::vector<std::string> warnings() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

/// Request and response body schemas, as served at GET /schema.
const nlohmann::json& api_schema();

}  // namespace flowscribe::gateway
