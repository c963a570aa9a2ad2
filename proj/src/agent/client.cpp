#include "flowscribe/agent/client.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <regex>
#include <thread>

#include <httplib.h>

namespace flowscribe::agent {

using nlohmann::json;

json to_json(const LLMRequest& r) {
    json msgs = json::array();
    for (const auto& m : r.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    return {{"system", r.system}, {"messages", msgs}, {"model", r.model}, {"temperature", r.temperature}};
}

LLMRequest llm_request_from_json(const json& j) {
    LLMRequest r;
    r.system = j.value("system", "");
    for (const auto& m : j.at("messages")) r.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    r.model = j.value("model", "");
    r.temperature = j.value("temperature", 0.0);
    return r;
}

ClientConfig ClientConfig::from_env(ClientConfig base) {
    if (const char* v = std::getenv("FLOWSCRIBE_LLM_URL"); v && *v) base.endpoint = v;
    if (const char* v = std::getenv("FLOWSCRIBE_LLM_KEY"); v && *v) base.credential = v;
    if (const char* v = std::getenv("FLOWSCRIBE_LLM_MODEL"); v && *v) base.model_id = v;
    if (const char* v = std::getenv("FLOWSCRIBE_LLM_TIMEOUT_MS"); v && *v) base.timeout = std::chrono::milliseconds(std::atol(v));
    return base;
}

ClientConfig ClientConfig::from_env() { return from_env(ClientConfig{}); }

MockClient::MockClient(std::vector<std::string> script, std::string model_id)
    : script_(std::move(script)), model_id_(std::move(model_id)) {}

std::string MockClient::complete(const LLMRequest& request) {
    std::lock_guard lock(mu_);
    seen_.push_back(request);
    if (!script_.empty()) return script_[std::min(seen_.size(), script_.size()) - 1];
    const std::string user = request.messages.empty() ? "" : request.messages.front().content;
    return mock_transcript(user);
}

std::size_t MockClient::calls() const {
    std::lock_guard lock(mu_);
    return seen_.size();
}

std::vector<LLMRequest> MockClient::requests() const {
    std::lock_guard lock(mu_);
    return seen_;
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::string fenced(const std::string& body) { return "Here is the objective.\n```objective-dsl\n" + trim(body) + "\n```\n"; }

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string mock_transcript(const std::string& user_message) {
    const auto at = user_message.rfind("New task: ");
    const std::string request = at == std::string::npos ? trim(user_message) : trim(user_message.substr(at + 10));
    const std::string req = lower(request);

    // a DO example with the same request wins
    static const std::regex example(R"(Example \d+ \(DO\)\nRequest: ([^\n]*)\n```objective-dsl\n([\s\S]*?)```)");
    for (auto it = std::sregex_iterator(user_message.begin(), user_message.end(), example); it != std::sregex_iterator(); ++it)
        if (lower(trim((*it)[1].str())) == req) return fenced((*it)[2].str());

    std::smatch m;
    std::optional<long> n;
    static const std::regex count(R"((\d+)\s*(?:particles|beads|microparticles|spheres))");
    if (std::regex_search(req, m, count)) n = std::stol(m[1].str());
    auto n_or = [&](long d) { return std::to_string(n.value_or(d)); };
    auto has = [&](std::initializer_list<const char*> words) {
        return std::any_of(words.begin(), words.end(), [&](const char* w) { return req.find(w) != std::string::npos; });
    };

    static const std::regex text(R"(["“]([^"”]+)["”])");
    if (has({"write", "letter", "spell"}) && std::regex_search(request, m, text))
        return fenced("(objective :name " + quoted("letters " + m[1].str()) + " :n " + n_or(200) +
                      "\n  (term shape.points :targets (text " + quoted(m[1].str()) +
                      " :height 40) :assign nearest :count 4000 :weight 1)\n  (term spacing.repel :d0 1 :weight 0.05))");
    if (has({"concentrat", "gather", "dense", "density", "cluster"}))
        return fenced("(objective :name \"concentrate\" :n " + n_or(100) + " :tolerance 0.5\n"
                      "  (term region.density :region (disk :center [0 0] :r 5.6419 :w 2) :weight 1)\n"
                      "  (term region.density :region (disk :center [0 0] :r 15 :w 8) :weight 0.3))");
    if (has({"hexagon"}) && has({"three", "trio", "3 "}))
        return fenced("(objective :name \"hexagon trio\" :n " + n_or(90) +
                      "\n  (term shape.points :targets (hexagon-trio :s 10) :assign balanced :weight 1))");
    if (has({"square"})) {
        if (n.value_or(4) == 4)
            return fenced("(objective :name \"square\" :n 4 :tolerance 0.01\n  (term shape.square :weight 1))");
        return fenced("(objective :name \"square\" :n " + n_or(4) +
                      "\n  (term shape.points :targets (polygon :sides 4 :r 15 :angle 45) :assign balanced :weight 1))");
    }
    if (has({"triangle"}))
        return fenced("(objective :name \"triangle\" :n " + n_or(18) +
                      "\n  (term shape.points :targets (polygon :sides 3 :r 15 :angle 90) :assign balanced :weight 1))");
    if (has({"hexagon"}))
        return fenced("(objective :name \"hexagon\" :n " + n_or(24) +
                      "\n  (term shape.points :targets (polygon :sides 6 :r 18) :weight 1))");
    if (has({"pentagram", "star"}))
        return fenced("(objective :name \"pentagram\" :n " + n_or(30) +
                      "\n  (term shape.points :targets (pentagram :r 20 :angle 90) :assign balanced :weight 1)\n"
                      "  (term spacing.repel :d0 2 :weight 0.05))");
    if (has({"heart"}))
        return fenced("(objective :name \"heart\" :n " + n_or(30) +
                      "\n  (term shape.curve :curve (heart :size 18 :center [0 2]) :weight 1)\n  (term spacing.repel :d0 3 :weight 0.2))");
    if (has({"spiral"}))
        return fenced("(objective :name \"spiral\" :n " + n_or(40) +
                      "\n  (term shape.curve :curve (spiral :a 2 :pitch 6 :turns 3) :samples 800 :weight 1)\n"
                      "  (term spacing.repel :d0 2 :weight 0.2))");
    if (has({"ellipse", "oval"}))
        return fenced("(objective :name \"ellipse\" :n " + n_or(24) +
                      "\n  (term shape.curve :curve (ellipse :a 25 :b 12) :weight 1)\n  (term spacing.repel :d0 3 :weight 0.1))");
    if (has({"wave", "sinus"}))
        return fenced("(objective :name \"wave\" :n " + n_or(30) +
                      "\n  (term shape.curve :curve (sinusoid :amplitude 8 :period 25 :length 70) :weight 1)\n"
                      "  (term spacing.repel :d0 2.5 :weight 0.3))");
    if (has({"line", "row"}))
        return fenced("(objective :name \"line\" :n " + n_or(10) +
                      "\n  (term shape.points :targets (segment :from [-30 0] :to [30 0]) :assign balanced :weight 1))");
    return fenced("(objective :name \"circle\" :n " + n_or(20) +
                  "\n  (term shape.curve :curve (circle :r 20) :weight 1)\n  (term spacing.repel :d0 4 :weight 0.2))");
}

HttpClient::HttpClient(ClientConfig cfg) : cfg_(std::move(cfg)) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) throw std::invalid_argument("LLM endpoint must be an http(s) URL: " + cfg_.endpoint);
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
    if (cfg_.retry.max_attempts < 1) throw std::invalid_argument("retry policy needs at least one attempt");
}

std::string HttpClient::complete(const LLMRequest& request) {
    LLMRequest req = request;
    req.model = cfg_.model_id;
    const std::string body = to_json(req).dump();
    httplib::Headers headers;
    if (!cfg_.credential.empty()) headers.emplace("Authorization", "Bearer " + cfg_.credential);

    auto backoff = cfg_.retry.backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
        httplib::Client cli(base_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        cli.set_write_timeout(secs.count(), usecs.count());
        auto res = cli.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            auto j = json::parse(res->body, nullptr, false);
            if (j.is_discarded() || !j.contains("text") || !j.at("text").is_string())
                throw TransportError("LLM endpoint returned a body without a text field");
            return j.at("text").get<std::string>();
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else {
            throw TransportError("LLM endpoint answered HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
        }
        if (attempt < cfg_.retry.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw TransportError(last_error + " after " + std::to_string(cfg_.retry.max_attempts) + " attempt(s)");
}

std::unique_ptr<LLMClient> make_client(const ClientConfig& cfg) {
    if (cfg.endpoint.empty() || cfg.endpoint == "mock") return std::make_unique<MockClient>(std::vector<std::string>{}, cfg.model_id);
    return std::make_unique<HttpClient>(cfg);
}

}  // namespace flowscribe::agent
