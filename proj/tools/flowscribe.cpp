#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowscribe/agent/catalogue.hpp"
#include "flowscribe/agent/synthesize.hpp"
#include "flowscribe/control/metrics.hpp"
#include "flowscribe/control/run.hpp"
#include "flowscribe/dsl/parser.hpp"
#include "flowscribe/flow/lut.hpp"
#include "flowscribe/gateway/config.hpp"
#include "flowscribe/gateway/server.hpp"
#include "flowscribe/inverse/planner.hpp"
#include "flowscribe/potential/solver.hpp"
#include "flowscribe/version.hpp"

using namespace flowscribe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw UsageError(path + " is not valid JSON");
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw std::runtime_error("cannot write " + path);
}

std::string fmt(double v) {
    if (std::isnan(v)) return "-";
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

/// Spec text plus the particle count (flag, else the spec's :n).
struct LoadedSpec {
    std::string text;
    dsl::ObjectiveSpec spec;
    std::size_t n = 0;
};

LoadedSpec load_spec(const std::string& path, long n_flag) {
    LoadedSpec s;
    s.text = read_file(path);
    auto r = dsl::parse(s.text);
    if (!r.ok()) {
        std::string msg = path + ": spec does not parse";
        for (const auto& d : r.diagnostics)
            msg += "\n  [" + std::to_string(d.span.begin) + ", " + std::to_string(d.span.end) + ") " + d.message;
        throw UsageError(msg);
    }
    s.spec = *r.spec;
    const long n = n_flag > 0 ? n_flag : s.spec.n_expected.value_or(0);
    if (n < 1) throw UsageError("the spec declares no :n; pass --n");
    s.n = static_cast<std::size_t>(n);
    return s;
}

control::ScheduledPerturbation parse_perturb_at(const std::string& arg) {
    // CYCLE:KIND[:MAGNITUDE]
    const auto a = arg.find(':');
    if (a == std::string::npos) throw UsageError("--perturb-at expects CYCLE:KIND, got '" + arg + "'");
    control::ScheduledPerturbation s;
    try {
        s.cycle = std::stoi(arg.substr(0, a));
    } catch (...) {
        throw UsageError("--perturb-at: bad cycle in '" + arg + "'");
    }
    std::string kind = arg.substr(a + 1);
    const auto b = kind.find(':');
    if (b != std::string::npos) {
        s.perturbation.magnitude = std::stod(kind.substr(b + 1));
        kind = kind.substr(0, b);
    }
    s.perturbation.kind = control::parse_perturb_kind(kind);
    if (s.perturbation.kind == control::PerturbKind::displacements)
        throw UsageError("--perturb-at supports scatter and triangle");
    s.perturbation.seed = static_cast<std::uint64_t>(s.cycle);
    return s;
}

flow::PrimitiveKind parse_primitive(const std::string& s) {
    auto k = flow::parse_kind(s);
    if (!k) throw UsageError("unknown primitive '" + s + "' (linear-lut, circular, saddle, shear)");
    return *k;
}

ParticleConfig read_state(const std::string& path) {
    const json j = read_json(path);
    ParticleConfig a;
    for (const auto& p : j.at("positions")) a.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (j.contains("fov")) {
        const auto& v = j.at("fov");
        a.fov = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>(), v.at(3).get<double>()};
    }
    return a;
}

json positions_json(const std::vector<Vec2>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.x, p.y});
    return a;
}

// ---- commands ----

struct Common {
    std::optional<std::string> config_file;
    gateway::GatewayConfig resolve(const json& flags = json::object()) const {
        std::optional<fs::path> f;
        if (config_file) f = *config_file;
        return gateway::resolve_config(f, gateway::process_env(), flags);
    }
};

struct SimulateArgs {
    std::string spec, out;
    long n = 0;
    std::uint64_t seed = 0;
    double fov = 50;
    int restarts = 3, record_every = 10, max_iters = 3000;
};

int cmd_simulate(const SimulateArgs& a) {
    const auto s = load_spec(a.spec, a.n);
    const auto obj = terms::compile(s.spec, s.n);
    potential::SolveOptions o;
    o.seed = a.seed;
    o.restarts = a.restarts;
    o.record_every = a.record_every;
    o.max_iters = a.max_iters;
    const auto tr = potential::solve_potential(obj, s.n, Rect::centered(a.fov, a.fov), o);
    std::ostringstream out;
    for (std::size_t k = 0; k < tr.frames.size(); ++k)
        out << json{{"frame", k},
                    {"iteration", std::min<long>(static_cast<long>(k) * a.record_every, tr.iterations)},
                    {"objective", obj.evaluate(tr.frames[k])},
                    {"positions", positions_json(tr.frames[k].positions)}}
                   .dump()
            << "\n";
    out << json{{"final", true},
                {"objective", tr.objective.back()},
                {"converged", tr.converged},
                {"reason", potential::to_string(tr.reason)},
                {"iterations", tr.iterations},
                {"positions", positions_json(tr.final.positions)}}
               .dump()
        << "\n";
    if (a.out.empty() || a.out == "-") std::cout << out.str();
    else write_text(a.out, out.str());
    std::cerr << obj.name() << ": n=" << s.n << " f=" << fmt(tr.objective.back()) << " iterations=" << tr.iterations
              << " " << potential::to_string(tr.reason) << (tr.converged ? " (converged)" : "") << "\n";
    return tr.converged ? 0 : 2;
}

struct PlanArgs {
    std::string spec, state, constraints, out, primitive = "linear-lut";
    std::size_t n_paths = 7;
    std::uint64_t seed = 0;
    int sqp_iters = 200;
};

int cmd_plan(const PlanArgs& a, const Common& common) {
    const auto cfg = common.resolve();
    const ParticleConfig state = read_state(a.state);
    const auto s = load_spec(a.spec, static_cast<long>(state.size()));
    const auto obj = terms::compile(s.spec, state.size());
    inverse::ConstraintSet c;
    c.center_bounds = state.fov;
    if (!a.constraints.empty()) c = inverse::constraints_from_json(read_json(a.constraints), state.fov);
    inverse::PlannerOptions o;
    o.kind = parse_primitive(a.primitive);
    o.n_paths = a.n_paths;
    o.seed = a.seed;
    o.sqp.max_iters = a.sqp_iters;
    control::FlowSetup fs;
    fs.lut_path = cfg.lut_path;
    const auto model = control::build_model(fs);
    const auto r = inverse::plan_cycle(*model, state, obj, c, o);
    const json out = {{"plan", control::to_json(r.plan)},
                      {"current_cost", r.current_cost},
                      {"predicted_cost", r.predicted_cost},
                      {"kkt_residual", r.kkt_residual},
                      {"max_violation", r.max_violation},
                      {"max_displacement", r.max_displacement},
                      {"iterations", r.iterations},
                      {"converged", r.converged},
                      {"advections", r.advections},
                      {"tangent_advections", r.tangent_advections}};
    if (a.out.empty() || a.out == "-") std::cout << out.dump(2) << "\n";
    else write_text(a.out, out.dump(2) + "\n");
    std::cerr << "f " << fmt(r.current_cost) << " -> " << fmt(r.predicted_cost) << " predicted, " << r.iterations
              << " SQP iterations, " << r.advections << " advections\n";
    return 0;
}

struct RunArgs {
    std::string spec, record, mode = "inverse", primitive = "linear-lut", constraints;
    long n = 0;
    std::uint64_t seed = 0;
    int cycles = 60, sqp_iters = 5, descent_iters = 50;
    std::size_t n_paths = 7;
    double fov = 50, init_half = 30, target = -1, a_max = -1;
    std::vector<std::string> perturb_at;
    bool quiet = false;
};

int cmd_run(const RunArgs& a, const Common& common) {
    const auto cfg = common.resolve();
    const auto s = load_spec(a.spec, a.n);
    const auto obj = terms::compile(s.spec, s.n);
    if (!(a.init_half > 0 && a.init_half <= a.fov)) throw UsageError("need 0 < --init-half <= --fov");
    control::RunConfig rc;
    rc.spec_text = s.text;
    rc.initial = potential::random_config(s.n, Rect::centered(a.init_half, a.init_half), a.seed);
    rc.initial.fov = Rect::centered(a.fov, a.fov);
    rc.flow.lut_path = cfg.lut_path;
    auto& loop = rc.loop;
    loop.mode = control::parse_run_mode(a.mode);
    loop.cycles = a.cycles;
    loop.seed = a.seed;
    loop.descent_iters = a.descent_iters;
    loop.target = a.target >= 0 ? a.target : (loop.mode == control::RunMode::inverse ? obj.tolerance() : 0.0);
    loop.planner.kind = parse_primitive(a.primitive);
    loop.planner.n_paths = a.n_paths;
    loop.planner.sqp.max_iters = a.sqp_iters;
    loop.constraints.center_bounds = rc.initial.fov;
    if (!a.constraints.empty()) loop.constraints = inverse::constraints_from_json(read_json(a.constraints), rc.initial.fov);
    if (a.a_max > 0) loop.constraints.a_max = a.a_max;
    for (const auto& p : a.perturb_at) loop.perturbations.push_back(parse_perturb_at(p));
    loop.validate();

    std::unique_ptr<control::ArchiveWriter> archive;
    if (!a.record.empty()) archive = std::make_unique<control::ArchiveWriter>(a.record, rc);
    control::LoopHooks hooks;
    hooks.on_frame = [&](const control::Frame& f) {
        if (archive) archive->write(f);
        if (a.quiet) return;
        std::cout << "cycle " << f.cycle << "  f=" << fmt(f.objective) << "  squareness=" << fmt(f.squareness)
                  << "  density=" << fmt(f.density_ratio);
        for (const auto& e : f.events) std::cout << "  [" << e.kind << "]";
        std::cout << "\n" << std::flush;
    };
    const auto rec = control::execute(rc, hooks);
    if (archive) archive->finish(rec.stop_reason);
    std::cout << "stop: " << rec.stop_reason << "  cycles=" << rec.frames.back().cycle
              << "  f=" << fmt(rec.frames.back().objective) << "  advections=" << rec.total_advections << "\n";
    return 0;
}

struct LutArgs {
    std::string file, out;
    flow::LutParams params;
    std::size_t stride = 4;
};

int cmd_lut_generate(const LutArgs& a) {
    if (a.out.empty()) throw UsageError("lut generate needs --out");
    const auto lut = flow::generate_synthetic_lut(a.params);
    flow::save_lut(lut, a.out);
    std::cout << "wrote " << a.out << " (" << lut.nx() << "x" << lut.ny() << " nodes) and " << flow::sidecar_path(a.out).string()
              << "\n";
    return 0;
}

int cmd_lut_info(const LutArgs& a) {
    const auto lut = flow::load_lut(a.file);
    json info = lut.header_json();
    info["nodes"] = {lut.nx(), lut.ny()};
    double vmax = 0;
    for (const auto& v : lut.velocities()) vmax = std::max(vmax, v.norm());
    info["max_speed"] = vmax;
    info["midpoint_velocity"] = {lut.velocity({0, 0}).x, lut.velocity({0, 0}).y};
    std::cout << info.dump(2) << "\n";
    return 0;
}

int cmd_lut_render(const LutArgs& a) {
    const auto lut = flow::load_lut(a.file);
    if (a.out.empty() || a.out == "-") {
        flow::write_quiver(lut, std::cout, a.stride);
    } else {
        std::ofstream out(a.out);
        if (!out) throw std::runtime_error("cannot write " + a.out);
        flow::write_quiver(lut, out, a.stride);
    }
    return 0;
}

struct CatalogueArgs {
    std::string path, verdict, id, prompt, spec, comment;
    int rating = 0;
    bool as_json = false;
};

int cmd_catalogue_list(const CatalogueArgs& a, const Common& common) {
    fs::path p = a.path.empty() ? common.resolve().catalogue_path() : fs::path(a.path);
    agent::Catalogue cat(p);
    for (const auto& w : cat.load_warnings()) std::cerr << "warning: " << w << "\n";
    const auto entries = a.verdict.empty() ? cat.snapshot() : cat.snapshot(agent::parse_verdict(a.verdict));
    if (a.as_json) {
        json arr = json::array();
        for (const auto& e : entries) arr.push_back(agent::to_json(e));
        std::cout << arr.dump(2) << "\n";
        return 0;
    }
    for (const auto& e : entries) {
        std::cout << e.id << "  " << agent::to_string(e.verdict) << (e.rated ? "" : "?") << "  score="
                  << (e.score ? fmt(*e.score) : std::string("-")) << "  rating=" << (e.rating ? std::to_string(*e.rating) : "-")
                  << "  " << e.prompt << "\n";
    }
    std::cerr << entries.size() << " entries\n";
    return 0;
}

int cmd_catalogue_show(const CatalogueArgs& a, const Common& common) {
    fs::path p = a.path.empty() ? common.resolve().catalogue_path() : fs::path(a.path);
    agent::Catalogue cat(p);
    auto e = cat.get(a.id);
    if (!e) throw UsageError("no catalogue entry '" + a.id + "'");
    std::cout << agent::to_json(*e).dump(2) << "\n";
    return 0;
}

int cmd_catalogue_rate(const CatalogueArgs& a, const Common& common) {
    fs::path p = a.path.empty() ? common.resolve().catalogue_path() : fs::path(a.path);
    agent::Catalogue cat(p);
    agent::Rating r;
    if (a.rating) r = agent::Rating::of(a.rating);
    else if (!a.verdict.empty()) r = agent::Rating::of(agent::parse_verdict(a.verdict));
    else throw UsageError("catalogue rate needs --rating or --verdict");
    std::cout << agent::to_json(cat.record_feedback(a.id, r, a.comment)).dump(2) << "\n";
    return 0;
}

int cmd_catalogue_add(const CatalogueArgs& a, const Common& common) {
    fs::path p = a.path.empty() ? common.resolve().catalogue_path() : fs::path(a.path);
    agent::Catalogue cat(p);
    agent::CatalogueEntry e;
    e.prompt = a.prompt;
    e.spec_text = read_file(a.spec);
    e.model_id = "user";
    e.template_version = agent::kTemplateVersion;
    if (a.rating) agent::apply_feedback(e, agent::Rating::of(a.rating), a.comment);
    else if (!a.verdict.empty()) agent::apply_feedback(e, agent::Rating::of(agent::parse_verdict(a.verdict)), a.comment);
    std::cout << cat.add(std::move(e)).id << "\n";
    return 0;
}

struct SynthArgs {
    std::string prompt, out, catalogue;
    std::size_t budget = agent::kDefaultBudget;
    bool no_record = false;
};

int cmd_synthesize(const SynthArgs& a, const Common& common) {
    const auto cfg = common.resolve();
    const fs::path p = a.catalogue.empty() ? cfg.catalogue_path() : fs::path(a.catalogue);
    agent::Catalogue cat(p);
    auto client = agent::make_client(cfg.llm);
    agent::SynthesisOptions o;
    o.budget = a.budget;
    const auto r = agent::synthesize(a.prompt, cat.snapshot(), *client, a.no_record ? nullptr : &cat, o);
    std::cerr << "provenance: " << agent::to_json(r.provenance).dump() << "\n";
    if (!r.ok()) {
        std::cerr << "synthesis failed (" << agent::to_string(r.failure) << "): " << r.error << "\n";
        if (!r.transcripts.empty()) std::cerr << "--- last transcript ---\n" << r.transcripts.back() << "\n";
        return 1;
    }
    if (a.out.empty() || a.out == "-") std::cout << r.spec_text;
    else write_text(a.out, r.spec_text);
    if (r.entry_id) std::cerr << "catalogue entry " << *r.entry_id << " (unrated)\n";
    return 0;
}

struct EvalArgs {
    std::string requests, catalogue;
    std::vector<std::size_t> budgets{0, 5, 10, 20};
    double threshold = 0.5;
    long n_default = 20;
    bool as_json = false;
};

int cmd_evaluate(const EvalArgs& a, const Common& common) {
    const auto cfg = common.resolve();
    std::vector<std::string> requests;
    {
        std::istringstream in(read_file(a.requests));
        for (std::string line; std::getline(in, line);)
            if (line.find_first_not_of(" \t\r") != std::string::npos && line[0] != '#') requests.push_back(line);
    }
    if (requests.empty()) throw UsageError(a.requests + " holds no requests");
    const fs::path p = a.catalogue.empty() ? cfg.catalogue_path() : fs::path(a.catalogue);
    agent::Catalogue cat(p);
    auto client = agent::make_client(cfg.llm);
    // geometric oracle: relax the spec directly and score the outcome
    auto scorer = [&](const dsl::ObjectiveSpec& spec) {
        const auto n = static_cast<std::size_t>(spec.n_expected.value_or(a.n_default));
        const auto obj = terms::compile(spec, n);
        potential::SolveOptions o;
        o.restarts = 1;
        o.max_iters = 1000;
        const auto tr = potential::solve_potential(obj, n, Rect::centered(50, 50), o);
        return agent::score_geometric(tr.final, obj);
    };
    const auto rows = agent::evaluate_catalogue(requests, cat.snapshot(), *client, a.budgets, scorer, a.threshold);
    if (a.as_json) {
        json arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"examples", r.examples}, {"attempts", r.attempts}, {"successes", r.successes},
                           {"success_rate", r.success_rate()}, {"mean_score", r.mean_score}});
        std::cout << arr.dump(2) << "\n";
        return 0;
    }
    std::cout << "examples  attempts  successes  rate    mean score\n";
    for (const auto& r : rows) {
        char line[96];
        std::snprintf(line, sizeof line, "%8zu  %8zu  %9zu  %5.3f  %10.4f\n", r.examples, r.attempts, r.successes,
                      r.success_rate(), r.mean_score);
        std::cout << line;
    }
    return 0;
}

int cmd_replay(const std::string& file) {
    const auto a = control::read_archive(file);
    if (a.truncated) std::cerr << "note: archive has no end record (interrupted run)\n";
    const auto r = control::replay(a);
    std::cout << (r.identical ? "identical" : "MISMATCH") << ": " << r.frames_compared << " frames compared";
    if (r.first_mismatch >= 0) std::cout << ", first mismatch at frame " << r.first_mismatch;
    std::cout << "\n";
    return r.identical ? 0 : 1;
}

struct ServeArgs {
    std::optional<std::string> data_dir, lut, host, llm_url, llm_model;
    std::optional<int> port;
};

int cmd_serve(const ServeArgs& a, const Common& common) {
    json flags = json::object();
    if (a.data_dir) flags["data_dir"] = *a.data_dir;
    if (a.lut) flags["lut_path"] = *a.lut;
    if (a.host) flags["host"] = *a.host;
    if (a.port) flags["port"] = *a.port;
    if (a.llm_url) flags["llm_endpoint"] = *a.llm_url;
    if (a.llm_model) flags["llm_model"] = *a.llm_model;
    const auto cfg = common.resolve(flags);

    // SIGINT/SIGTERM are taken synchronously on this thread; workers inherit the mask
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    gateway::Gateway gw(cfg);
    const int port = gw.start();
    std::cerr << "flowscribe " << kVersion << " listening on http://" << cfg.host << ":" << port << " (data "
              << cfg.data_dir.string() << ", llm " << cfg.llm.endpoint << ")\n";
    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "shutting down (signal " << sig << ")\n";
    gw.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowscribe: language-to-objective particle assembly"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));
    Common common;
    app.add_option("--config", common.config_file, "JSON config file (data_dir, lut_path, llm_*, host, port)")
        ->check(CLI::ExistingFile);
    app.fallthrough();

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "HTTP + server-sent-events service");
    c_serve->add_option("--data-dir", serve.data_dir, "catalogue and run archives");
    c_serve->add_option("--lut", serve.lut, "LUT file for linear-lut runs");
    c_serve->add_option("--host", serve.host);
    c_serve->add_option("--port", serve.port, "0 picks a free port");
    c_serve->add_option("--llm-url", serve.llm_url, "\"mock\" or an http(s) endpoint");
    c_serve->add_option("--llm-model", serve.llm_model);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "relax particles directly along the objective gradient");
    c_sim->add_option("--spec", sim.spec)->required()->check(CLI::ExistingFile);
    c_sim->add_option("--n", sim.n, "particle count (default: the spec's :n)");
    c_sim->add_option("--seed", sim.seed);
    c_sim->add_option("--out", sim.out, "newline-delimited frames (default stdout)");
    c_sim->add_option("--fov", sim.fov, "half-width of the field of view, µm")->capture_default_str();
    c_sim->add_option("--restarts", sim.restarts)->capture_default_str();
    c_sim->add_option("--record-every", sim.record_every)->capture_default_str();
    c_sim->add_option("--max-iters", sim.max_iters)->capture_default_str();

    PlanArgs plan;
    auto* c_plan = app.add_subcommand("plan", "plan one control cycle of scan paths");
    c_plan->add_option("--spec", plan.spec)->required()->check(CLI::ExistingFile);
    c_plan->add_option("--state", plan.state, "JSON {positions: [[x, y]], fov?: [x0, y0, x1, y1]}")->required()->check(CLI::ExistingFile);
    c_plan->add_option("--n-paths", plan.n_paths)->capture_default_str();
    c_plan->add_option("--primitive", plan.primitive)->capture_default_str();
    c_plan->add_option("--constraints", plan.constraints, "JSON constraint set")->check(CLI::ExistingFile);
    c_plan->add_option("--seed", plan.seed);
    c_plan->add_option("--sqp-iters", plan.sqp_iters)->capture_default_str();
    c_plan->add_option("--out", plan.out, "plan JSON (default stdout)");

    RunArgs run;
    auto* c_run = app.add_subcommand("run", "closed-loop assembly");
    c_run->add_option("--spec", run.spec)->required()->check(CLI::ExistingFile);
    c_run->add_option("--n", run.n, "particle count (default: the spec's :n)");
    c_run->add_option("--seed", run.seed);
    c_run->add_option("--cycles", run.cycles)->capture_default_str();
    c_run->add_option("--mode", run.mode, "inverse | potential")->capture_default_str();
    c_run->add_option("--primitive", run.primitive)->capture_default_str();
    c_run->add_option("--n-paths", run.n_paths)->capture_default_str();
    c_run->add_option("--sqp-iters", run.sqp_iters, "SQP iterations per cycle")->capture_default_str();
    c_run->add_option("--descent-iters", run.descent_iters, "potential mode: iterations per cycle")->capture_default_str();
    c_run->add_option("--a-max", run.a_max, "amplitude bound");
    c_run->add_option("--constraints", run.constraints, "JSON constraint set")->check(CLI::ExistingFile);
    c_run->add_option("--target", run.target, "stop at this objective (default: the spec's tolerance in inverse mode)");
    c_run->add_option("--fov", run.fov, "field-of-view half-width, µm")->capture_default_str();
    c_run->add_option("--init-half", run.init_half, "initial particles uniform in this half-width")->capture_default_str();
    c_run->add_option("--perturb-at", run.perturb_at, "CYCLE:KIND[:MAGNITUDE], KIND = triangle | scatter");
    c_run->add_option("--record", run.record, "gzip NDJSON run archive");
    c_run->add_flag("--quiet", run.quiet);

    LutArgs lut;
    auto* c_lut = app.add_subcommand("lut", "flow look-up tables");
    c_lut->require_subcommand(1);
    auto* c_lut_gen = c_lut->add_subcommand("generate", "synthetic point-force table");
    c_lut_gen->add_option("--out", lut.out)->required();
    c_lut_gen->add_option("--scan-length", lut.params.scan_length)->capture_default_str();
    c_lut_gen->add_option("--epsilon", lut.params.epsilon)->capture_default_str();
    c_lut_gen->add_option("--half-extent", lut.params.half_extent)->capture_default_str();
    c_lut_gen->add_option("--spacing", lut.params.spacing)->capture_default_str();
    c_lut_gen->add_option("--generator", lut.params.generator)->capture_default_str();
    c_lut_gen->add_option("--sign", lut.params.sign)->capture_default_str();
    auto* c_lut_info = c_lut->add_subcommand("info", "print the header and summary");
    c_lut_info->add_option("file", lut.file)->required()->check(CLI::ExistingFile);
    auto* c_lut_render = c_lut->add_subcommand("render", "quiver-plot data: x y vx vy");
    c_lut_render->add_option("file", lut.file)->required()->check(CLI::ExistingFile);
    c_lut_render->add_option("--out", lut.out, "default stdout");
    c_lut_render->add_option("--stride", lut.stride)->capture_default_str();

    CatalogueArgs cat;
    auto* c_cat = app.add_subcommand("catalogue", "inspect and edit the DO/DONT catalogue");
    c_cat->require_subcommand(1);
    c_cat->add_option("--catalogue", cat.path, "catalogue file (default: <data_dir>/catalogue.jsonl)");
    c_cat->fallthrough();
    auto* c_cat_list = c_cat->add_subcommand("list");
    c_cat_list->add_option("--verdict", cat.verdict, "DO | DONT");
    c_cat_list->add_flag("--json", cat.as_json);
    auto* c_cat_show = c_cat->add_subcommand("show");
    c_cat_show->add_option("id", cat.id)->required();
    auto* c_cat_rate = c_cat->add_subcommand("rate");
    c_cat_rate->add_option("id", cat.id)->required();
    c_cat_rate->add_option("--rating", cat.rating, "1-5")->check(CLI::Range(1, 5));
    c_cat_rate->add_option("--verdict", cat.verdict, "DO | DONT");
    c_cat_rate->add_option("--comment", cat.comment);
    auto* c_cat_add = c_cat->add_subcommand("add");
    c_cat_add->add_option("--prompt", cat.prompt)->required();
    c_cat_add->add_option("--spec", cat.spec)->required()->check(CLI::ExistingFile);
    c_cat_add->add_option("--rating", cat.rating, "1-5")->check(CLI::Range(1, 5));
    c_cat_add->add_option("--verdict", cat.verdict, "DO | DONT");
    c_cat_add->add_option("--comment", cat.comment);

    SynthArgs syn;
    auto* c_syn = app.add_subcommand("synthesize", "turn a request into an objective spec");
    c_syn->add_option("prompt", syn.prompt)->required();
    c_syn->add_option("--budget", syn.budget, "catalogue examples in the prompt")->capture_default_str();
    c_syn->add_option("--out", syn.out, "default stdout");
    c_syn->add_option("--catalogue", syn.catalogue);
    c_syn->add_flag("--no-record", syn.no_record, "do not add the result to the catalogue");

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("evaluate-catalogue", "success rate against catalogue size");
    c_ev->add_option("--requests", ev.requests, "one request per line")->required()->check(CLI::ExistingFile);
    c_ev->add_option("--budgets", ev.budgets, "example budgets")->delimiter(',')->capture_default_str();
    c_ev->add_option("--threshold", ev.threshold, "geometric score counted as success")->capture_default_str();
    c_ev->add_option("--n-default", ev.n_default, "particle count for specs without :n")->capture_default_str();
    c_ev->add_option("--catalogue", ev.catalogue);
    c_ev->add_flag("--json", ev.as_json);

    std::string replay_file;
    auto* c_replay = app.add_subcommand("replay", "re-run an archive and compare frames byte for byte");
    c_replay->add_option("file", replay_file)->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_serve->parsed()) return cmd_serve(serve, common);
        if (c_sim->parsed()) return cmd_simulate(sim);
        if (c_plan->parsed()) return cmd_plan(plan, common);
        if (c_run->parsed()) return cmd_run(run, common);
        if (c_lut_gen->parsed()) return cmd_lut_generate(lut);
        if (c_lut_info->parsed()) return cmd_lut_info(lut);
        if (c_lut_render->parsed()) return cmd_lut_render(lut);
        if (c_cat_list->parsed()) return cmd_catalogue_list(cat, common);
        if (c_cat_show->parsed()) return cmd_catalogue_show(cat, common);
        if (c_cat_rate->parsed()) return cmd_catalogue_rate(cat, common);
        if (c_cat_add->parsed()) return cmd_catalogue_add(cat, common);
        if (c_syn->parsed()) return cmd_synthesize(syn, common);
        if (c_ev->parsed()) return cmd_evaluate(ev, common);
        if (c_replay->parsed()) return cmd_replay(replay_file);
    } catch (const UsageError& e) {
        std::cerr << "flowscribe: " << e.what() << "\n";
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "flowscribe: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
