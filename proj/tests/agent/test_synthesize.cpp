#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "doctest.h"
#include "flowscribe/agent/synthesize.hpp"
#include "flowscribe/dsl/parser.hpp"
#include "flowscribe/potential/solver.hpp"

using namespace flowscribe;
using namespace flowscribe::agent;

namespace {

const std::string kValid =
    "Sure, here it is.\n```objective-dsl\n(objective :name \"ring\" :n 12\n  (term shape.curve :curve (circle :r 15)))\n```\n";
const std::string kMalformed = "```objective-dsl\n(objective :name \"ring\" (term shape.curve :curve (circle :r -3))\n```\n";
const std::string kProse = "I would arrange the particles in a ring.";

Catalogue::Clock ticking() {
    auto t = std::make_shared<std::atomic<std::int64_t>>(1);
    return [t] { return (*t)++; };
}

class ThrowingClient : public LLMClient {
public:
    std::string model_id() const override { return "down"; }
    std::string complete(const LLMRequest&) override { throw TransportError("connection refused"); }
};

struct FakeEndpoint {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};
    std::atomic<int> fail_first{0};
    int fail_status = 503;
    std::string last_auth;
    nlohmann::json last_body;
    std::mutex mu;

    FakeEndpoint() {
        server.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++hits;
            {
                std::lock_guard lock(mu);
                last_auth = req.get_header_value("Authorization");
                last_body = nlohmann::json::parse(req.body);
            }
            if (n <= fail_first) {
                res.status = fail_status;
                res.set_content("{\"error\":\"busy\"}", "application/json");
                return;
            }
            res.set_content(nlohmann::json{{"text", kValid}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeEndpoint() {
        server.stop();
        thread.join();
    }
    ClientConfig config() const {
        ClientConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
        c.credential = "secret";
        c.model_id = "remote-model";
        c.timeout = std::chrono::milliseconds(2000);
        c.retry.backoff = std::chrono::milliseconds(1);
        return c;
    }
};

}  // namespace

TEST_CASE("fixed valid transcript") {
    Catalogue cat(ticking());
    MockClient client({kValid}, "mock-a");
    const auto r = synthesize("a ring of twelve", cat, client);
    REQUIRE(r.ok());
    CHECK(r.provenance.model_id == "mock-a");
    CHECK(r.provenance.bundle_hash == bundle_hash(r.bundle));
    CHECK(r.provenance.repair_rounds == 0);
    CHECK(r.spec_text == dsl::print_canonical(*r.spec));
    CHECK(r.provenance.spec_hash == sha256_hex(r.spec_text));
    CHECK(client.calls() == 1);
    REQUIRE(r.entry_id);
    const auto e = cat.get(*r.entry_id);
    CHECK(e->verdict == Verdict::DO);
    CHECK_FALSE(e->rated);
    CHECK(e->spec_text == r.spec_text);
    CHECK(e->prompt == "a ring of twelve");

    const auto req = client.requests().front();
    CHECK(req.temperature == 0.0);
    CHECK(req.system == system_message());
    CHECK(req.messages.size() == 1);
    CHECK(req.messages[0].content == render_user_message(r.bundle));

    MockClient again({kValid}, "mock-a");
    Catalogue cat2(ticking());
    CHECK(synthesize("a ring of twelve", cat2, again).provenance.spec_hash == r.provenance.spec_hash);
}

TEST_CASE("malformed then valid: one repair round") {
    Catalogue cat(ticking());
    MockClient client({kMalformed, kValid});
    const auto r = synthesize("ring", cat, client);
    REQUIRE(r.ok());
    CHECK(r.provenance.repair_rounds == 1);
    CHECK(r.transcripts.size() == 2);
    const auto second = client.requests().at(1);
    REQUIRE(second.messages.size() == 3);
    CHECK(second.messages[1].role == "assistant");
    CHECK(second.messages[1].content == kMalformed);
    CHECK(second.messages[2].role == "user");
    CHECK(second.messages[2].content.find("Diagnostics") != std::string::npos);
    CHECK(second.messages[2].content.find("[") != std::string::npos);
}

TEST_CASE("prose twice: error and a DONT entry") {
    Catalogue cat(ticking());
    MockClient client({kProse});
    const auto r = synthesize("ring", cat, client);
    CHECK_FALSE(r.ok());
    CHECK(r.failure == SynthesisFailure::extraction);
    CHECK(client.calls() == 2);
    REQUIRE(r.entry_id);
    const auto e = cat.get(*r.entry_id);
    CHECK(e->verdict == Verdict::DONT);
    CHECK_FALSE(e->parseable);
    CHECK(e->spec_text == kProse);
    // the failure shows up as negative guidance next time
    const auto b = compose_prompt(cat.snapshot(), "ring again");
    REQUIRE(b.examples.size() == 1);
    CHECK(b.examples[0].verdict == Verdict::DONT);
}

TEST_CASE("persistent parse failure keeps the diagnostics") {
    Catalogue cat(ticking());
    MockClient client({kMalformed});
    const auto r = synthesize("ring", cat, client);
    CHECK(r.failure == SynthesisFailure::parse);
    CHECK_FALSE(r.diagnostics.empty());
    CHECK(r.entry_id);
}

TEST_CASE("semantic errors count as parse failures") {
    Catalogue cat(ticking());
    MockClient client({"```objective-dsl\n(objective :n 3 (term shape.square :weight 1))\n```"});
    const auto r = synthesize("square", cat, client);
    CHECK(r.failure == SynthesisFailure::parse);
    CAPTURE(r.error);
    CHECK(r.error.find("n = 4") != std::string::npos);
}

TEST_CASE("transport failure records nothing") {
    Catalogue cat(ticking());
    ThrowingClient client;
    const auto r = synthesize("ring", cat, client);
    CHECK(r.failure == SynthesisFailure::transport);
    CHECK_FALSE(r.entry_id);
    CHECK(cat.size() == 0);
}

TEST_CASE("bundles do not depend on the model") {
    std::vector<CatalogueEntry> examples;
    CatalogueEntry e;
    e.id = "c000001";
    e.prompt = "ring";
    e.spec_text = "(objective :n 12 (term shape.curve :curve (circle :r 15)))";
    e.rated = true;
    examples.push_back(e);
    MockClient a({kValid}, "model-a"), b({kValid}, "model-b");
    const auto ra = synthesize("ring", examples, a, nullptr);
    const auto rb = synthesize("ring", examples, b, nullptr);
    CHECK(bundle_bytes(ra.bundle) == bundle_bytes(rb.bundle));
    CHECK(ra.provenance.bundle_hash == rb.provenance.bundle_hash);
    CHECK(a.requests()[0].messages[0].content == b.requests()[0].messages[0].content);
    CHECK(ra.provenance.model_id != rb.provenance.model_id);
}

TEST_CASE("unscripted mock: every answer parses and compiles") {
    const std::vector<std::string> requests = {
        "arrange 20 particles on a circle", "make a square", "form a square with 12 particles",
        "a triangle please", "hexagon", "three hexagons touching", "draw a star", "a heart",
        "spiral of 40 beads", "an oval", "sine wave", "a line of particles", "concentrate the particles",
        "write \"KIT\" with 500 particles", "something unusual"};
    for (const auto& r : requests) {
        CAPTURE(r);
        Catalogue cat(ticking());
        MockClient client;
        const auto res = synthesize(r, cat, client);
        REQUIRE(res.ok());
        CHECK(res.spec->n_expected);
        CHECK_NOTHROW(terms::compile(*res.spec));
    }
    Catalogue cat(ticking());
    MockClient client;
    CHECK(*synthesize("write \"KIT\" with 500 particles", cat, client).spec->n_expected == 500);
}

TEST_CASE("unscripted mock reuses a matching DO example") {
    Catalogue cat(ticking());
    CatalogueEntry e;
    e.prompt = "My Special Shape";
    e.spec_text = "(objective :name \"special\" :n 7 (term shape.curve :curve (circle :r 9)))";
    const auto id = cat.add(e).id;
    cat.record_feedback(id, Rating::of(5), "");
    MockClient client;
    const auto r = synthesize("my special shape", cat, client);
    REQUIRE(r.ok());
    CHECK(r.spec->name == "special");
}

TEST_CASE("geometric score") {
    const auto obj = terms::compile(*dsl::parse("(objective :n 4 :tolerance 0.2 (term shape.square))").spec);
    ParticleConfig sq{{{0, 0}, {4, 0}, {4, 4}, {0, 4}}, Rect::centered(50, 50)};
    CHECK(score_geometric(sq, obj) == doctest::Approx(1.0));
    double last = 1.0;
    for (double stretch : {1.05, 1.2, 1.5, 2.0, 4.0}) {
        ParticleConfig r{{{0, 0}, {4 * stretch, 0}, {4 * stretch, 4}, {0, 4}}, sq.fov};
        const double f = obj.evaluate(r);
        const double s = score_geometric(r, obj);
        CHECK(s == doctest::Approx(std::exp(-f / 0.2)));
        CHECK(s < last);
        CHECK(s >= 0.0);
        last = s;
    }
    // f = f0 gives exp(-1): pick the stretch by bisection
    double lo = 1.0, hi = 4.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        ParticleConfig r{{{0, 0}, {4 * mid, 0}, {4 * mid, 4}, {0, 4}}, sq.fov};
        (obj.evaluate(r) < 0.2 ? lo : hi) = mid;
    }
    ParticleConfig at{{{0, 0}, {4 * lo, 0}, {4 * lo, 4}, {0, 4}}, sq.fov};
    CHECK(score_geometric(at, obj) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    const auto dflt = terms::compile(*dsl::parse("(objective :n 4 (term shape.square))").spec);
    CHECK(dflt.tolerance() == 0.05);
}

TEST_CASE("http client: success, retries and errors") {
    FakeEndpoint ep;
    HttpClient client(ep.config());
    CHECK(client.model_id() == "remote-model");
    LLMRequest req{"sys", {{"user", "hello"}}, "ignored", 0.0};
    CHECK(client.complete(req) == kValid);
    CHECK(ep.last_auth == "Bearer secret");
    CHECK(ep.last_body.at("model") == "remote-model");
    CHECK(ep.last_body.at("temperature") == 0.0);
    CHECK(ep.last_body.at("system") == "sys");
    CHECK(ep.last_body.at("messages").at(0).at("content") == "hello");

    ep.hits = 0;
    ep.fail_first = 2;
    CHECK(client.complete(req) == kValid);
    CHECK(ep.hits == 3);

    ep.hits = 0;
    ep.fail_first = 5;
    CHECK_THROWS_AS(client.complete(req), TransportError);
    CHECK(ep.hits == 3);

    ep.hits = 0;
    ep.fail_status = 400;
    CHECK_THROWS_AS(client.complete(req), TransportError);
    CHECK(ep.hits == 1);

    auto cfg = ep.config();
    cfg.endpoint = "http://127.0.0.1:1/v1/complete";
    cfg.retry.max_attempts = 2;
    CHECK_THROWS_AS(HttpClient(cfg).complete(req), TransportError);
    cfg.endpoint = "ftp://nowhere";
    CHECK_THROWS_AS(HttpClient{cfg}, std::invalid_argument);

    // the synthesizer works against the same endpoint
    ep.fail_first = 0;
    Catalogue cat(ticking());
    auto remote = make_client(ep.config());
    CHECK(synthesize("ring", cat, *remote).ok());
    CHECK(dynamic_cast<MockClient*>(make_client(ClientConfig{}).get()) != nullptr);
}

TEST_CASE("wire request round trip") {
    LLMRequest r{"s", {{"user", "a"}, {"assistant", "b"}}, "m", 0.0};
    const auto back = llm_request_from_json(to_json(r));
    CHECK(to_json(back) == to_json(r));
}

TEST_CASE("catalogue evaluation harness") {
    std::vector<CatalogueEntry> cat;
    for (int i = 0; i < 3; ++i) {
        CatalogueEntry e;
        e.id = "c00000" + std::to_string(i + 1);
        e.prompt = "shape " + std::to_string(i);
        e.spec_text = "(objective :name \"s" + std::to_string(i) + "\" :n 6 (term shape.curve :curve (circle :r 9)))";
        e.rated = true;
        cat.push_back(e);
    }
    MockClient client;
    const auto rows = evaluate_catalogue({"shape 0", "shape 1", "a heart"}, cat, client, {0, 1, 3},
                                         [](const dsl::ObjectiveSpec& s) { return s.name.rfind("s", 0) == 0 ? 1.0 : 0.0; }, 0.5);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].examples == 0);
    CHECK(rows[0].successes == 0);  // zero-shot: the mock falls back to its keyword table
    CHECK(rows[2].successes == 2);  // with the catalogue the matching examples are reused
    CHECK(rows[2].success_rate() == doctest::Approx(2.0 / 3));
}
