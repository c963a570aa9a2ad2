#include "flowscribe/gateway/server.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "flowscribe/agent/catalogue.hpp"
#include "flowscribe/agent/synthesize.hpp"
#include "flowscribe/control/run.hpp"
#include "flowscribe/dsl/parser.hpp"
#include "flowscribe/potential/solver.hpp"
#include "flowscribe/version.hpp"

// after Eigen: <resolv.h> defines a _res macro
#include <httplib.h>

namespace flowscribe::gateway {

using nlohmann::json;
namespace fs = std::filesystem;

void log_to_stderr(const std::string& line) {
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::cerr << line << std::endl;
}

namespace {

struct HttpError : std::runtime_error {
    int status;
    json body;
    HttpError(int s, const std::string& msg, json extra = json::object())
        : std::runtime_error(msg), status(s), body(std::move(extra)) {
        body["error"] = msg;
    }
};

struct Run {
    std::string id;
    std::string session_id;
    std::string request_digest;
    control::RunConfig config;
    std::shared_ptr<const terms::CompiledObjective> objective;
    std::string prompt;
    fs::path archive;

    mutable std::mutex mu;
    std::condition_variable cv;
    std::vector<std::string> frames;  // SSE payloads; index == cycle == event id
    std::optional<control::Frame> last;
    std::deque<control::Perturbation> pending;
    std::optional<std::string> entry_id;
    bool done = false;
    bool converged = false;
    std::string stop_reason;
    std::string error;
    std::atomic<bool> cancel{false};
    std::thread worker;
};

struct Session {
    std::string id;
    std::string run_id;
    std::optional<std::string> last_prompt, last_spec_text, last_entry_id;
};

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw HttpError(400, "request body must be a JSON object");
    return j;
}

template <class T>
T field(const json& body, const char* key, T fallback) {
    if (!body.contains(key) || body.at(key).is_null()) return fallback;
    try {
        return body.at(key).get<T>();
    } catch (const json::exception&) {
        throw HttpError(400, std::string("field '") + key + "' has the wrong type");
    }
}

json diagnostics_json(const std::vector<dsl::Diagnostic>& ds) {
    json out = json::array();
    for (const auto& d : ds) out.push_back(dsl::to_json(d));
    return out;
}

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

struct Gateway::Impl {
    GatewayConfig cfg;
    Logger log;
    std::unique_ptr<agent::LLMClient> client;
    agent::Catalogue catalogue;
    httplib::Server server;

    std::mutex mu;  // sessions, runs, idempotency keys
    std::map<std::string, Session> sessions;
    std::map<std::string, std::shared_ptr<Run>> runs;
    std::map<std::string, std::string> idempotency;  // session id + '\n' + key -> run id
    std::mt19937_64 rng{std::random_device{}()};

    std::atomic<bool> stopping{false};
    std::mutex streams_mu;
    std::condition_variable streams_cv;
    int open_streams = 0;
    std::mutex stop_mu;
    bool stopped = false;
    std::thread listener;
    int bound_port = -1;

    Impl(GatewayConfig c, std::unique_ptr<agent::LLMClient> cl, Logger lg)
        : cfg(std::move(c)),
          log(std::move(lg)),
          client(cl ? std::move(cl) : agent::make_client(cfg.llm)),
          catalogue(prepare(cfg)) {
        for (const auto& w : catalogue.load_warnings()) log("warning: " + w);
        if (cfg.lut_path) {
            control::FlowSetup f;
            f.lut_path = cfg.lut_path;
            control::build_model(f);
        }
        server.new_task_queue = [] { return new httplib::ThreadPool(64); };
        // SO_REUSEADDR only: httplib's default SO_REUSEPORT would let a second instance share the port
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        routes();
    }

    static fs::path prepare(const GatewayConfig& c) {
        fs::create_directories(c.data_dir);
        fs::create_directories(c.runs_dir());
        return c.catalogue_path();
    }

    std::string fresh_id(char prefix) {
        static const char* hex = "0123456789abcdef";
        for (;;) {
            std::string id(1, prefix);
            std::uint64_t v = rng();
            for (int i = 0; i < 12; ++i, v >>= 4) id += hex[v & 15];
            if (!sessions.count(id) && !runs.count(id) && !fs::exists(cfg.runs_dir() / (id + ".run"))) return id;
        }
    }

    std::shared_ptr<Run> find_run(const std::string& id) {
        std::lock_guard lock(mu);
        auto it = runs.find(id);
        if (it == runs.end()) throw HttpError(404, "unknown run '" + id + "'");
        return it->second;
    }

    template <class F>
    httplib::Server::Handler wrap(F f) {
        return [this, f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const HttpError& e) {
                send(res, e.status, e.body);
            } catch (const agent::UnknownEntry& e) {
                send(res, 404, {{"error", e.what()}});
            } catch (const json::exception& e) {
                send(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
            } catch (const std::invalid_argument& e) {
                send(res, 400, {{"error", e.what()}});
            } catch (const std::exception& e) {
                log(std::string("error: ") + req.method + " " + req.path + ": " + e.what());
                send(res, 500, {{"error", e.what()}});
            }
        };
    }

    json run_status(const Run& r) const {
        std::lock_guard lock(r.mu);
        return {{"run_id", r.id},
                {"session_id", r.session_id},
                {"mode", control::to_string(r.config.loop.mode)},
                {"n", r.config.initial.size()},
                {"frames", r.frames.size()},
                {"live", !r.done},
                {"stop_reason", r.done ? json(r.stop_reason) : json(nullptr)},
                {"converged", r.converged},
                {"error", r.error.empty() ? json(nullptr) : json(r.error)},
                {"entry_id", r.entry_id ? json(*r.entry_id) : json(nullptr)},
                {"archive", r.archive.string()},
                {"events", "/runs/" + r.id + "/events"}};
    }

    void routes() {
        server.Get("/health", wrap([this](const httplib::Request&, httplib::Response& res) {
            std::size_t live = 0;
            {
                std::lock_guard lock(mu);
                for (const auto& [id, r] : runs) {
                    std::lock_guard rl(r->mu);
                    live += r->done ? 0 : 1;
                }
            }
            send(res, 200, {{"status", "ok"}, {"version", kVersion}, {"live_runs", live}, {"catalogue_entries", catalogue.size()}});
        }));
        server.Get("/version", wrap([](const httplib::Request&, httplib::Response& res) {
            send(res, 200, {{"version", kVersion}});
        }));
        server.Get("/schema", wrap([](const httplib::Request&, httplib::Response& res) { send(res, 200, api_schema()); }));

        server.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
            parse_body(req);
            std::lock_guard lock(mu);
            Session s;
            s.id = fresh_id('s');
            sessions.emplace(s.id, s);
            send(res, 201, {{"session_id", s.id}, {"config", to_json(cfg)}});
        }));
        server.Get(R"(/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu);
            auto it = sessions.find(req.matches[1]);
            if (it == sessions.end()) throw HttpError(404, "unknown session '" + req.matches[1].str() + "'");
            const Session& s = it->second;
            auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); };
            send(res, 200, {{"session_id", s.id},
                            {"run_id", s.run_id.empty() ? json(nullptr) : json(s.run_id)},
                            {"last_prompt", opt(s.last_prompt)},
                            {"last_spec_text", opt(s.last_spec_text)},
                            {"last_entry_id", opt(s.last_entry_id)}});
        }));
        server.Post(R"(/sessions/([^/]+)/synthesize)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            synthesize(req.matches[1], parse_body(req), res);
        }));
        server.Post(R"(/sessions/([^/]+)/runs)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            create_run(req.matches[1], req, res);
        }));

        server.Get(R"(/runs/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
            send(res, 200, run_status(*find_run(req.matches[1])));
        }));
        server.Get(R"(/runs/([^/]+)/events)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            stream(find_run(req.matches[1]), req, res);
        }));
        server.Post(R"(/runs/([^/]+)/perturb)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            perturb(find_run(req.matches[1]), parse_body(req), res);
        }));
        server.Post(R"(/runs/([^/]+)/feedback)", wrap([this](const httplib::Request& req, httplib::Response& res) {
            feedback(find_run(req.matches[1]), parse_body(req), res);
        }));

        server.Get("/catalogue", wrap([this](const httplib::Request& req, httplib::Response& res) {
            std::vector<agent::CatalogueEntry> all;
            if (req.has_param("verdict")) {
                all = catalogue.snapshot(agent::parse_verdict(req.get_param_value("verdict")));
            } else {
                all = catalogue.snapshot();
            }
            auto number = [&](const char* key, long fallback) {
                if (!req.has_param(key)) return fallback;
                try {
                    return std::stol(req.get_param_value(key));
                } catch (...) {
                    throw HttpError(400, std::string("query parameter '") + key + "' must be an integer");
                }
            };
            const long offset = number("offset", 0);
            const long limit = number("limit", 50);
            if (offset < 0 || limit < 1 || limit > 500) throw HttpError(400, "need offset >= 0 and 1 <= limit <= 500");
            json page = json::array();
            for (long i = offset; i < static_cast<long>(all.size()) && i < offset + limit; ++i)
                page.push_back(agent::to_json(all[static_cast<std::size_t>(i)]));
            send(res, 200, {{"entries", page}, {"total", all.size()}, {"offset", offset}, {"limit", limit}});
        }));
        server.Get(R"(/catalogue/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
            auto e = catalogue.get(req.matches[1]);
            if (!e) throw HttpError(404, "unknown catalogue entry '" + req.matches[1].str() + "'");
            send(res, 200, agent::to_json(*e));
        }));

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) res.set_content(json{{"error", httplib::status_message(res.status)}}.dump(), "application/json");
        });
    }

    Session& session(const std::string& id) {
        auto it = sessions.find(id);
        if (it == sessions.end()) throw HttpError(404, "unknown session '" + id + "'");
        return it->second;
    }

    void synthesize(const std::string& sid, const json& body, httplib::Response& res) {
        {
            std::lock_guard lock(mu);
            session(sid);
        }
        const std::string prompt = field<std::string>(body, "prompt", "");
        if (prompt.empty()) throw HttpError(400, "field 'prompt' is required");
        agent::SynthesisOptions opt;
        opt.budget = field<std::size_t>(body, "budget", opt.budget);
        const auto r = agent::synthesize(prompt, catalogue, *client, opt);
        {
            std::lock_guard lock(mu);
            Session& s = session(sid);
            s.last_prompt = prompt;
            s.last_entry_id = r.entry_id;
            s.last_spec_text = r.ok() ? std::optional<std::string>(r.spec_text) : std::nullopt;
        }
        json prov = agent::to_json(r.provenance);
        if (r.ok()) {
            send(res, 200, {{"spec_text", r.spec_text}, {"provenance", prov}, {"entry_id", *r.entry_id}});
            return;
        }
        json out = {{"error", r.error},
                    {"failure", agent::to_string(r.failure)},
                    {"transcript", r.transcripts.empty() ? json(nullptr) : json(r.transcripts.back())},
                    {"diagnostics", diagnostics_json(r.diagnostics)},
                    {"provenance", prov},
                    {"entry_id", r.entry_id ? json(*r.entry_id) : json(nullptr)}};
        send(res, r.failure == agent::SynthesisFailure::transport ? 502 : 422, out);
    }

    void create_run(const std::string& sid, const httplib::Request& req, httplib::Response& res) {
        const json body = parse_body(req);
        const std::string key = req.get_header_value("Idempotency-Key");
        const std::string digest = body.dump();

        std::optional<std::string> spec_text = body.contains("spec_text") ? std::optional(field<std::string>(body, "spec_text", ""))
                                                                           : std::nullopt;
        std::optional<std::string> session_entry, session_prompt, session_spec;
        {
            std::lock_guard lock(mu);
            Session& s = session(sid);
            if (!key.empty()) {
                auto it = idempotency.find(sid + "\n" + key);
                if (it != idempotency.end()) {
                    const auto r = runs.at(it->second);
                    if (r->request_digest != digest)
                        throw HttpError(422, "idempotency key was used with a different request body");
                    json st = run_status(*r);
                    st["replayed"] = true;
                    send(res, 200, st);
                    return;
                }
            }
            if (!s.run_id.empty()) {
                const auto& cur = runs.at(s.run_id);
                std::lock_guard rl(cur->mu);
                if (!cur->done) throw HttpError(409, "session already has a live run", {{"run_id", s.run_id}});
            }
            session_entry = s.last_entry_id;
            session_prompt = s.last_prompt;
            session_spec = s.last_spec_text;
        }
        if (!spec_text) spec_text = session_spec;
        if (!spec_text) throw HttpError(400, "field 'spec_text' is required (no synthesized spec in this session)");

        auto parsed = dsl::parse(*spec_text);
        if (!parsed.ok())
            throw HttpError(422, "spec does not parse: " + parsed.diagnostics.front().message,
                            {{"diagnostics", diagnostics_json(parsed.diagnostics)}});
        const dsl::ObjectiveSpec& spec = *parsed.spec;

        const long n_req = field<long>(body, "n", spec.n_expected.value_or(0));
        if (n_req < 1) throw HttpError(400, "field 'n' is required when the spec declares no :n");
        std::shared_ptr<const terms::CompiledObjective> obj;
        try {
            obj = std::make_shared<const terms::CompiledObjective>(terms::compile(spec, static_cast<std::size_t>(n_req)));
        } catch (const std::exception& e) {
            throw HttpError(422, std::string("spec does not compile: ") + e.what(),
                            {{"diagnostics", json::array({dsl::to_json(dsl::Diagnostic{dsl::Severity::error, spec.span, e.what()})})}});
        }

        control::RunConfig rc;
        rc.spec_text = *spec_text;
        control::LoopConfig& loop = rc.loop;
        loop.mode = control::parse_run_mode(field<std::string>(body, "mode", "inverse"));
        loop.cycles = field<int>(body, "cycles", loop.cycles);
        loop.seed = field<std::uint64_t>(body, "seed", 0);
        loop.descent_iters = field<int>(body, "descent_iters", loop.descent_iters);
        loop.target = field<double>(body, "target", loop.mode == control::RunMode::inverse ? obj->tolerance() : 0.0);
        loop.planner.n_paths = field<std::size_t>(body, "n_paths", loop.planner.n_paths);
        loop.planner.sqp.max_iters = field<int>(body, "sqp_iters", loop.planner.sqp.max_iters);
        const std::string prim = field<std::string>(body, "primitive", "linear-lut");
        const auto kind = flow::parse_kind(prim);
        if (!kind) throw HttpError(400, "unknown primitive '" + prim + "'");
        loop.planner.kind = *kind;

        const double fov_half = field<double>(body, "fov_half", 50.0);
        const double init_half = field<double>(body, "init_half", std::min(30.0, fov_half));
        if (!(fov_half > 0) || !(init_half > 0) || init_half > fov_half)
            throw HttpError(400, "need 0 < init_half <= fov_half");
        const Rect fov = Rect::centered(fov_half, fov_half);
        loop.constraints = inverse::constraints_from_json(body.value("constraints", json::object()), fov);
        if (body.contains("a_max")) {
            loop.constraints.a_max = field<double>(body, "a_max", loop.constraints.a_max);
            loop.constraints.validate();
        }
        for (const auto& s : body.value("perturbations", json::array()))
            loop.perturbations.push_back({s.at("cycle").get<int>(), control::perturbation_from_json(s.at("perturbation"))});
        for (const auto& s : loop.perturbations) s.perturbation.validate(static_cast<std::size_t>(n_req));
        loop.validate();

        rc.initial = potential::random_config(static_cast<std::size_t>(n_req), Rect::centered(init_half, init_half), loop.seed);
        rc.initial.fov = fov;
        rc.flow.lut_path = cfg.lut_path;

        auto run = std::make_shared<Run>();
        run->session_id = sid;
        run->request_digest = digest;
        run->config = std::move(rc);
        run->objective = obj;
        const std::string canonical = dsl::print_canonical(spec);
        run->prompt = field<std::string>(body, "prompt", session_prompt.value_or(spec.name));

        if (body.contains("entry_id")) {
            const std::string eid = field<std::string>(body, "entry_id", "");
            if (!catalogue.get(eid)) throw HttpError(404, "unknown catalogue entry '" + eid + "'");
            run->entry_id = eid;
        } else if (session_entry && session_spec && *session_spec == canonical) {
            run->entry_id = session_entry;
        }

        {
            std::lock_guard lock(mu);
            if (stopping) throw HttpError(503, "service is shutting down");
            Session& s = session(sid);
            if (!s.run_id.empty()) {
                const auto& cur = runs.at(s.run_id);
                std::lock_guard rl(cur->mu);
                if (!cur->done) throw HttpError(409, "session already has a live run", {{"run_id", s.run_id}});
            }
            run->id = fresh_id('r');
            run->archive = cfg.runs_dir() / (run->id + ".run");
            runs.emplace(run->id, run);
            s.run_id = run->id;
            if (!key.empty()) idempotency[sid + "\n" + key] = run->id;
            run->worker = std::thread([this, run] { execute(run); });
        }
        send(res, 201, run_status(*run));
    }

    void execute(const std::shared_ptr<Run>& r) {
        try {
            control::ArchiveWriter archive(r->archive, r->config);
            control::LoopHooks hooks;
            hooks.on_frame = [&](const control::Frame& f) {
                archive.write(f);
                json j = control::to_json(f);
                j["run_id"] = r->id;
                {
                    std::lock_guard lock(r->mu);
                    r->frames.push_back(j.dump());
                    r->last = f;
                }
                r->cv.notify_all();
            };
            hooks.pending = [&] {
                std::lock_guard lock(r->mu);
                std::vector<control::Perturbation> out(r->pending.begin(), r->pending.end());
                r->pending.clear();
                return out;
            };
            hooks.cancelled = [&] { return r->cancel.load(); };
            const auto rec = control::execute(r->config, hooks);
            archive.finish(rec.stop_reason);
            std::lock_guard lock(r->mu);
            r->stop_reason = rec.stop_reason;
            r->converged = !rec.frames.empty() && rec.frames.back().converged;
        } catch (const std::exception& e) {
            log("error: run " + r->id + ": " + e.what());
            std::lock_guard lock(r->mu);
            r->stop_reason = "error";
            r->error = e.what();
        }
        {
            std::lock_guard lock(r->mu);
            r->done = true;
        }
        r->cv.notify_all();
    }

    void stream(const std::shared_ptr<Run>& r, const httplib::Request& req, httplib::Response& res) {
        std::size_t start = 0;
        std::string last = req.get_header_value("Last-Event-ID");
        if (last.empty() && req.has_param("last_event_id")) last = req.get_param_value("last_event_id");
        if (!last.empty()) {
            try {
                start = std::stoul(last) + 1;
            } catch (...) {
                throw HttpError(400, "Last-Event-ID must be a frame number");
            }
        }
        auto next = std::make_shared<std::size_t>(start);
        res.set_header("Cache-Control", "no-cache");
        {
            std::lock_guard lock(streams_mu);
            ++open_streams;
        }
        res.set_chunked_content_provider("text/event-stream", [this, r, next](std::size_t, httplib::DataSink& sink) {
            std::string out;
            bool finished = false;
            {
                std::unique_lock lock(r->mu);
                r->cv.wait_for(lock, std::chrono::seconds(15),
                               [&] { return *next < r->frames.size() || r->done; });
                for (; *next < r->frames.size(); ++*next)
                    out += "id: " + std::to_string(*next) + "\nevent: frame\ndata: " + r->frames[*next] + "\n\n";
                if (r->done) {
                    finished = true;
                    json end = {{"run_id", r->id},
                                {"stop_reason", r->stop_reason},
                                {"converged", r->converged},
                                {"frames", r->frames.size()},
                                {"error", r->error.empty() ? json(nullptr) : json(r->error)}};
                    out += "event: end\ndata: " + end.dump() + "\n\n";
                }
            }
            if (out.empty()) out = ": keep-alive\n\n";
            if (!sink.write(out.data(), out.size())) return false;
            if (finished) sink.done();
            return true;
        }, [this](bool) {
            {
                std::lock_guard lock(streams_mu);
                --open_streams;
            }
            streams_cv.notify_all();
        });
    }

    void perturb(const std::shared_ptr<Run>& r, const json& body, httplib::Response& res) {
        control::Perturbation p = control::perturbation_from_json(body);
        p.validate(r->config.initial.size());
        std::lock_guard lock(r->mu);
        if (r->done) throw HttpError(409, "run has finished");
        r->pending.push_back(std::move(p));
        send(res, 202, {{"run_id", r->id}, {"queued", r->pending.size()}, {"next_cycle", r->frames.size()}});
    }

    void feedback(const std::shared_ptr<Run>& r, const json& body, httplib::Response& res) {
        agent::Rating rating;
        if (body.contains("rating")) rating = agent::Rating::of(field<int>(body, "rating", 0));
        else if (body.contains("verdict")) rating = agent::Rating::of(agent::parse_verdict(field<std::string>(body, "verdict", "")));
        else throw HttpError(400, "feedback needs 'rating' (1-5) or 'verdict'");
        const std::string comment = field<std::string>(body, "comment", "");

        std::optional<double> score;
        std::optional<std::string> entry_id;
        {
            std::lock_guard lock(r->mu);
            if (r->last) score = agent::score_geometric({r->last->positions, r->config.initial.fov}, *r->objective);
            entry_id = r->entry_id;
        }
        agent::CatalogueEntry entry;
        if (entry_id) {
            entry = catalogue.record_feedback(*entry_id, rating, comment, score);
        } else {
            agent::CatalogueEntry draft;
            draft.prompt = r->prompt;
            draft.spec_text = dsl::print_canonical(*dsl::parse(r->config.spec_text).spec);
            draft.score = score;
            draft.model_id = "user";
            draft.template_version = agent::kTemplateVersion;
            agent::apply_feedback(draft, rating, comment);
            entry = catalogue.add(std::move(draft));
            std::lock_guard lock(r->mu);
            r->entry_id = entry.id;
        }
        send(res, 200, agent::to_json(entry));
    }

    void shutdown() {
        std::lock_guard sl(stop_mu);
        if (stopped) return;
        stopped = true;
        stopping = true;
        std::vector<std::shared_ptr<Run>> all;
        {
            std::lock_guard lock(mu);
            for (auto& [id, r] : runs) all.push_back(r);
        }
        for (auto& r : all) {
            r->cancel = true;
            r->cv.notify_all();
        }
        for (auto& r : all)
            if (r->worker.joinable()) r->worker.join();
        {
            // let subscribers receive the end events before the sockets close
            std::unique_lock lock(streams_mu);
            streams_cv.wait_for(lock, std::chrono::seconds(5), [&] { return open_streams == 0; });
        }
        server.stop();
        if (listener.joinable()) listener.join();
    }
};

Gateway::Gateway(GatewayConfig cfg, std::unique_ptr<agent::LLMClient> client, Logger log)
    : impl_(std::make_unique<Impl>(std::move(cfg), std::move(client), std::move(log))) {}

Gateway::~Gateway() { stop(); }

int Gateway::bind() {
    if (impl_->bound_port >= 0) return impl_->bound_port;
    auto& c = impl_->cfg;
    const int port = c.port == 0 ? impl_->server.bind_to_any_port(c.host)
                                 : (impl_->server.bind_to_port(c.host, c.port) ? c.port : -1);
    if (port < 0) throw std::runtime_error("cannot bind " + c.host + ":" + std::to_string(c.port));
    impl_->bound_port = port;
    return port;
}

void Gateway::serve() {
    bind();
    impl_->server.listen_after_bind();
}

int Gateway::start() {
    const int port = bind();
    impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Gateway::stop() { impl_->shutdown(); }

int Gateway::port() const { return impl_->bound_port; }

const GatewayConfig& Gateway::config() const { return impl_->cfg; }

std::vector<std::string> Gateway::warnings() const { return impl_->catalogue.load_warnings(); }

}  // namespace flowscribe::gateway
