#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "flowscribe/agent/client.hpp"

namespace flowscribe::gateway {

struct GatewayConfig {
    std::filesystem::path data_dir = "flowscribe-data";
    /// LUT file for linear-lut runs; the synthetic table is generated when unset.
    std::optional<std::string> lut_path;
    agent::ClientConfig llm;
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port

    std::filesystem::path catalogue_path() const { return data_dir / "catalogue.jsonl"; }
    std::filesystem::path runs_dir() const { return data_dir / "runs"; }
};

/// Keys: data_dir, lut_path, llm_endpoint, llm_credential, llm_model, llm_timeout_ms, host, port.
/// Unknown keys are rejected.
GatewayConfig apply_settings(GatewayConfig base, const nlohmann::json& settings);

/// Credential is redacted.
nlohmann::json to_json(const GatewayConfig& c);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// FLOWSCRIBE_DATA_DIR, FLOWSCRIBE_LUT, FLOWSCRIBE_LLM_URL, FLOWSCRIBE_LLM_KEY, FLOWSCRIBE_LLM_MODEL,
/// FLOWSCRIBE_LLM_TIMEOUT_MS, FLOWSCRIBE_HOST, FLOWSCRIBE_PORT as settings.
nlohmann::json env_settings(const EnvLookup& env);

/// Defaults, then the JSON config file, then the environment, then `flags` (CLI).
GatewayConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env,
                             const nlohmann::json& flags = nlohmann::json::object());

}  // namespace flowscribe::gateway
