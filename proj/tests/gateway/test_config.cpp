#include <fstream>
#include <map>

#include "doctest.h"
#include "flowscribe/gateway/config.hpp"
#include "support/fixtures.hpp"

using namespace flowscribe::gateway;
using nlohmann::json;

namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
    return [vars](const std::string& k) -> std::optional<std::string> {
        auto it = vars.find(k);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

}  // namespace

TEST_CASE("defaults without file, environment or flags") {
    const auto c = resolve_config(std::nullopt, fake_env({}));
    CHECK(c.data_dir == "flowscribe-data");
    CHECK(c.port == 8080);
    CHECK(c.llm.endpoint == "mock");
    CHECK_FALSE(c.lut_path);
    CHECK(c.catalogue_path() == std::filesystem::path("flowscribe-data") / "catalogue.jsonl");
}

TEST_CASE("precedence is flags over environment over file") {
    fixtures::TempDir tmp;
    const auto file = tmp.path / "gateway.json";
    std::ofstream(file) << R"({"data_dir": "/from/file", "port": 9000, "llm_model": "file-model",
                             "lut_path": "file.lut", "host": "0.0.0.0"})";

    const auto only_file = resolve_config(file, fake_env({}));
    CHECK(only_file.data_dir == "/from/file");
    CHECK(only_file.port == 9000);
    CHECK(only_file.host == "0.0.0.0");

    const auto env = fake_env({{"FLOWSCRIBE_PORT", "9100"},
                               {"FLOWSCRIBE_LLM_MODEL", "env-model"},
                               {"FLOWSCRIBE_LLM_URL", "https://llm.example/v1"},
                               {"FLOWSCRIBE_LLM_KEY", "secret"},
                               {"FLOWSCRIBE_LLM_TIMEOUT_MS", "2500"}});
    const auto with_env = resolve_config(file, env);
    CHECK(with_env.port == 9100);
    CHECK(with_env.llm.model_id == "env-model");
    CHECK(with_env.llm.endpoint == "https://llm.example/v1");
    CHECK(with_env.llm.timeout == std::chrono::milliseconds(2500));
    CHECK(with_env.data_dir == "/from/file");
    CHECK(*with_env.lut_path == "file.lut");

    const auto with_flags = resolve_config(file, env, {{"port", 9200}, {"data_dir", "/from/flag"}});
    CHECK(with_flags.port == 9200);
    CHECK(with_flags.data_dir == "/from/flag");
    CHECK(with_flags.llm.model_id == "env-model");

    const json shown = to_json(with_flags);
    CHECK(shown.at("llm_credential") == "***");
    CHECK(shown.dump().find("secret") == std::string::npos);
}

TEST_CASE("bad configuration is rejected") {
    CHECK_THROWS_AS(apply_settings({}, {{"prot", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_settings({}, {{"port", 70000}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_settings({}, {{"port", "eighty"}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_settings({}, {{"data_dir", 3.5}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_settings({}, json::array()), std::invalid_argument);
    CHECK(apply_settings({}, {{"port", nullptr}}).port == 8080);

    fixtures::TempDir tmp;
    CHECK_THROWS_AS(resolve_config(tmp.path / "missing.json", fake_env({})), std::runtime_error);
    std::ofstream(tmp.path / "bad.json") << "{port: 1";
    CHECK_THROWS_AS(resolve_config(tmp.path / "bad.json", fake_env({})), std::invalid_argument);
    CHECK_THROWS_AS(resolve_config(std::nullopt, fake_env({{"FLOWSCRIBE_PORT", "x"}})), std::invalid_argument);
}
