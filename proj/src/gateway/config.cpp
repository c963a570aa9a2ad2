#include "flowscribe/gateway/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace flowscribe::gateway {

using nlohmann::json;

namespace {

std::string as_text(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw std::invalid_argument("config key '" + key + "' must be a string");
}

long long as_integer(const json& v, const std::string& key) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        std::size_t used = 0;
        long long out = 0;
        try {
            out = std::stoll(s, &used);
        } catch (...) {
            used = 0;
        }
        if (used == s.size() && !s.empty()) return out;
    }
    throw std::invalid_argument("config key '" + key + "' must be an integer");
}

}  // namespace

GatewayConfig apply_settings(GatewayConfig c, const json& settings) {
    if (!settings.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, v] : settings.items()) {
        if (v.is_null()) continue;
        if (key == "data_dir") c.data_dir = as_text(v, key);
        else if (key == "lut_path") c.lut_path = as_text(v, key);
        else if (key == "llm_endpoint") c.llm.endpoint = as_text(v, key);
        else if (key == "llm_credential") c.llm.credential = as_text(v, key);
        else if (key == "llm_model") c.llm.model_id = as_text(v, key);
        else if (key == "llm_timeout_ms") c.llm.timeout = std::chrono::milliseconds(as_integer(v, key));
        else if (key == "host") c.host = as_text(v, key);
        else if (key == "port") {
            const long long p = as_integer(v, key);
            if (p < 0 || p > 65535) throw std::invalid_argument("port out of range");
            c.port = static_cast<int>(p);
        } else {
            throw std::invalid_argument("unknown config key '" + key + "'");
        }
    }
    return c;
}

json to_json(const GatewayConfig& c) {
    return {{"data_dir", c.data_dir.string()},
            {"lut_path", c.lut_path ? json(*c.lut_path) : json(nullptr)},
            {"llm_endpoint", c.llm.endpoint},
            {"llm_credential", c.llm.credential.empty() ? "" : "***"},
            {"llm_model", c.llm.model_id},
            {"llm_timeout_ms", c.llm.timeout.count()},
            {"host", c.host},
            {"port", c.port}};
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
}

json env_settings(const EnvLookup& env) {
    static const std::pair<const char*, const char*> names[] = {
        {"FLOWSCRIBE_DATA_DIR", "data_dir"},       {"FLOWSCRIBE_LUT", "lut_path"},
        {"FLOWSCRIBE_LLM_URL", "llm_endpoint"},    {"FLOWSCRIBE_LLM_KEY", "llm_credential"},
        {"FLOWSCRIBE_LLM_MODEL", "llm_model"},     {"FLOWSCRIBE_LLM_TIMEOUT_MS", "llm_timeout_ms"},
        {"FLOWSCRIBE_HOST", "host"},               {"FLOWSCRIBE_PORT", "port"}};
    json out = json::object();
    for (const auto& [var, key] : names)
        if (auto v = env(var)) out[key] = *v;
    return out;
}

GatewayConfig resolve_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env, const json& flags) {
    GatewayConfig c;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw std::runtime_error("cannot read config file " + file->string());
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw std::invalid_argument("config file " + file->string() + " is not valid JSON");
        c = apply_settings(c, j);
    }
    c = apply_settings(c, env_settings(env));
    return apply_settings(c, flags);
}

}  // namespace flowscribe::gateway
