#include "flowscribe/control/loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flowscribe/control/metrics.hpp"
#include "flowscribe/potential/solver.hpp"

namespace flowscribe::control {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_nan(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json points_json(const std::vector<Vec2>& pts) {
    json a = json::array();
    for (const auto& p : pts) a.push_back({p.x, p.y});
    return a;
}

std::vector<Vec2> points_from(const json& j) {
    std::vector<Vec2> out;
    for (const auto& p : j) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return out;
}

double squareness_or_nan(const ParticleConfig& a) {
    if (a.size() < 4) return kNaN;
    try {
        return squareness_index(a);
    } catch (const std::invalid_argument&) {
        return kNaN;
    }
}

}  // namespace

inverse::PlannerOptions LoopConfig::default_planner() {
    inverse::PlannerOptions o;
    o.sqp.max_iters = 5;
    o.sqp.final_derivatives = false;
    return o;
}

std::string to_string(RunMode m) { return m == RunMode::potential ? "potential" : "inverse"; }

RunMode parse_run_mode(const std::string& s) {
    if (s == "inverse") return RunMode::inverse;
    if (s == "potential") return RunMode::potential;
    throw std::invalid_argument("run mode must be potential or inverse, got '" + s + "'");
}

void LoopConfig::validate() const {
    if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
    if (planner.n_paths < 1) throw std::invalid_argument("need at least one primitive");
    if (descent_iters < 1) throw std::invalid_argument("descent_iters must be >= 1");
    if (!(accept_threshold >= 0)) throw std::invalid_argument("accept threshold must be >= 0");
    constraints.validate();
    for (const auto& s : perturbations)
        if (s.cycle < 1) throw std::invalid_argument("perturbation cycles start at 1");
}

std::vector<double> RunRecord::objective_trace() const {
    std::vector<double> out;
    for (const auto& f : frames) out.push_back(f.objective);
    return out;
}

std::vector<double> RunRecord::squareness_trace() const {
    std::vector<double> out;
    for (const auto& f : frames) out.push_back(f.squareness);
    return out;
}

std::vector<double> RunRecord::density_trace() const {
    std::vector<double> out;
    for (const auto& f : frames) out.push_back(f.density_ratio);
    return out;
}

std::vector<Event> RunRecord::events() const {
    std::vector<Event> out;
    for (const auto& f : frames) out.insert(out.end(), f.events.begin(), f.events.end());
    return out;
}

ParticleConfig RunRecord::final_config() const {
    if (frames.empty()) throw std::logic_error("empty run record");
    return {frames.back().positions, fov};
}

RunRecord run_closed_loop(const flow::FlowModel& model, const ParticleConfig& initial,
                          const terms::CompiledObjective& obj, const LoopConfig& cfg, const LoopHooks& hooks) {
    cfg.validate();
    if (obj.n() != initial.size()) throw std::invalid_argument("objective particle count does not match the configuration");

    RunRecord rec;
    rec.seed = cfg.seed;
    rec.fov = initial.fov;
    ParticleConfig a = initial;
    auto measure = [&](Frame& fr) {
        fr.positions = a.positions;
        fr.objective = obj.evaluate(a);
        fr.squareness = squareness_or_nan(a);
        fr.density_ratio = cfg.density_region ? density_ratio(a, *cfg.density_region) : kNaN;
        fr.converged = cfg.target > 0 && fr.objective <= cfg.target;
    };
    auto emit = [&](Frame fr) {
        rec.total_advections += fr.advections;
        rec.frames.push_back(std::move(fr));
        if (hooks.on_frame) hooks.on_frame(rec.frames.back());
    };

    Frame start;
    measure(start);
    start.predicted = start.objective;
    emit(std::move(start));

    int last_scheduled = 0;
    for (const auto& s : cfg.perturbations) last_scheduled = std::max(last_scheduled, s.cycle);

    std::optional<inverse::WarmStart> warm;
    rec.stop_reason = "cycles";
    for (int cycle = 1; cycle <= cfg.cycles; ++cycle) {
        if (cfg.target > 0 && rec.frames.back().objective <= cfg.target && cycle > last_scheduled) {
            rec.stop_reason = "target";
            break;
        }
        if (hooks.cancelled && hooks.cancelled()) {
            rec.stop_reason = "cancelled";
            break;
        }
        Frame fr;
        fr.cycle = cycle;

        std::vector<std::pair<Perturbation, std::string>> due;
        for (const auto& s : cfg.perturbations)
            if (s.cycle == cycle) due.push_back({s.perturbation, "schedule"});
        if (hooks.pending)
            for (auto& p : hooks.pending()) due.push_back({std::move(p), "live"});
        for (const auto& [p, source] : due) {
            a = perturb(a, p);
            fr.events.push_back({cycle, "perturbation", {{"source", source}, {"perturbation", to_json(p)}}});
        }
        const double f = obj.evaluate(a);
        if (cfg.target > 0 && f <= cfg.target) {
            // at target with a scheduled perturbation still ahead
            fr.events.push_back({cycle, "hold", {{"objective", f}}});
            fr.predicted = f;
            measure(fr);
            emit(std::move(fr));
            continue;
        }

        inverse::PlannerOptions po = cfg.planner;
        po.seed = cfg.seed + static_cast<std::uint64_t>(cycle);
        auto attempt = [&](const std::optional<inverse::WarmStart>& w) -> std::optional<inverse::PlanResult> {
            try {
                auto r = inverse::plan_cycle(model, a, obj, cfg.constraints, po, w);
                fr.advections += r.advections;
                return r;
            } catch (const inverse::InfeasibleError& e) {
                fr.events.push_back({cycle, "infeasible", {{"best_violation", e.best_violation()}}});
                return std::nullopt;
            }
        };
        auto improves = [&](const std::optional<inverse::PlanResult>& r) {
            return r && r->predicted_cost <= f * (1 - cfg.accept_threshold) && r->predicted_cost < f;
        };

        auto plan = attempt(warm);
        if (!improves(plan)) {
            fr.events.push_back({cycle, "reseed", {{"predicted", plan ? json(plan->predicted_cost) : json(nullptr)}}});
            po.seed = cfg.seed ^ (0x5eedULL << 32) ^ static_cast<std::uint64_t>(cycle);
            po.exhaustive_seeds = true;
            plan = attempt(std::nullopt);
        }
        if (improves(plan)) {
            a = flow::advect(model, a, plan->plan, po.dt, po.substeps).config;
            ++fr.advections;
            fr.plan = plan->plan;
            fr.accepted = true;
            fr.predicted = plan->predicted_cost;
            warm = inverse::WarmStart(plan->theta, plan->hessian);
        } else {
            fr.events.push_back({cycle, "stall", {{"objective", f}}});
            fr.predicted = f;
            warm.reset();
        }
        measure(fr);
        emit(std::move(fr));
    }
    if (rec.stop_reason == "cycles" && cfg.target > 0 && rec.frames.back().objective <= cfg.target)
        rec.stop_reason = "target";
    return rec;
}

RunRecord run_descent_loop(const ParticleConfig& initial, const terms::CompiledObjective& obj, const LoopConfig& cfg,
                           const LoopHooks& hooks) {
    cfg.validate();
    if (obj.n() != initial.size()) throw std::invalid_argument("objective particle count does not match the configuration");

    RunRecord rec;
    rec.seed = cfg.seed;
    rec.fov = initial.fov;
    ParticleConfig a = initial;
    int last_scheduled = 0;
    for (const auto& s : cfg.perturbations) last_scheduled = std::max(last_scheduled, s.cycle);
    auto finish = [&](Frame& fr) {
        fr.positions = a.positions;
        fr.objective = obj.evaluate(a);
        fr.predicted = fr.objective;
        fr.squareness = squareness_or_nan(a);
        fr.density_ratio = cfg.density_region ? density_ratio(a, *cfg.density_region) : kNaN;
        if (cfg.target > 0 && fr.objective <= cfg.target) fr.converged = true;
        rec.frames.push_back(std::move(fr));
        if (hooks.on_frame) hooks.on_frame(rec.frames.back());
    };

    Frame start;
    finish(start);

    potential::SolveOptions so;
    so.max_iters = cfg.descent_iters;
    rec.stop_reason = "cycles";
    for (int cycle = 1; cycle <= cfg.cycles; ++cycle) {
        if (rec.frames.back().converged && cycle > last_scheduled) {
            rec.stop_reason = cfg.target > 0 && rec.frames.back().objective <= cfg.target ? "target" : "converged";
            break;
        }
        if (hooks.cancelled && hooks.cancelled()) {
            rec.stop_reason = "cancelled";
            break;
        }
        Frame fr;
        fr.cycle = cycle;
        std::vector<std::pair<Perturbation, std::string>> due;
        for (const auto& s : cfg.perturbations)
            if (s.cycle == cycle) due.push_back({s.perturbation, "schedule"});
        if (hooks.pending)
            for (auto& p : hooks.pending()) due.push_back({std::move(p), "live"});
        for (const auto& [p, source] : due) {
            a = perturb(a, p);
            fr.events.push_back({cycle, "perturbation", {{"source", source}, {"perturbation", to_json(p)}}});
        }
        so.seed = cfg.seed + static_cast<std::uint64_t>(cycle);
        const auto tr = potential::descend(obj, a, so);
        fr.accepted = tr.iterations > 0;
        fr.converged = tr.converged;
        a.positions = tr.final.positions;
        finish(fr);
    }
    if (rec.stop_reason == "cycles" && rec.frames.back().converged)
        rec.stop_reason = cfg.target > 0 && rec.frames.back().objective <= cfg.target ? "target" : "converged";
    return rec;
}

std::optional<terms::Region> density_region_of(const dsl::ObjectiveSpec& spec) {
    for (const auto& t : spec.terms)
        if (t.kind == "region.density")
            if (const auto* v = t.param("region")) return terms::region_from_value(*v);
    return std::nullopt;
}

json to_json(const terms::Region& r) {
    switch (r.kind) {
        case terms::RegionKind::disk:
            return {{"kind", "disk"}, {"center", {r.center.x, r.center.y}}, {"r", r.r}, {"w", r.w}};
        case terms::RegionKind::rect:
            return {{"kind", "rect"}, {"center", {r.center.x, r.center.y}}, {"size", {r.size.x, r.size.y}}, {"w", r.w}};
        case terms::RegionKind::polygon:
            return {{"kind", "polygon"}, {"vertices", points_json(r.vertices)}, {"w", r.w}};
    }
    return {};
}

terms::Region region_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double w = j.value("w", 1.0);
    if (kind == "disk")
        return terms::Region::disk({j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()},
                                   j.at("r").get<double>(), w);
    if (kind == "rect")
        return terms::Region::rect({j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()},
                                   {j.at("size").at(0).get<double>(), j.at("size").at(1).get<double>()}, w);
    if (kind == "polygon") return terms::Region::polygon(points_from(j.at("vertices")), w);
    throw std::invalid_argument("unknown region kind '" + kind + "'");
}

json to_json(const inverse::PlannerOptions& o) {
    return {{"kind", flow::to_string(o.kind)},
            {"n_paths", o.n_paths},
            {"amplitude", o.amplitude == inverse::AmplitudeMode::free ? "free" : "fixed"},
            {"gradient", o.gradient == inverse::GradientMode::automatic         ? "auto"
                         : o.gradient == inverse::GradientMode::finite_difference ? "fd"
                                                                                 : "tangent"},
            {"dt", o.dt},
            {"substeps", o.substeps},
            {"fd_step", o.fd_step},
            {"fd_scheme", o.fd_scheme == inverse::FdScheme::forward ? "forward" : "central"},
            {"early_accept", o.early_accept},
            {"exhaustive_seeds", o.exhaustive_seeds},
            {"sqp",
             {{"tolerance", o.sqp.tolerance},
              {"max_iters", o.sqp.max_iters},
              {"final_derivatives", o.sqp.final_derivatives},
              {"line_refinement", o.sqp.line_refinement},
              {"feasibility_starts", o.sqp.feasibility_starts}}}};
}

inverse::PlannerOptions planner_options_from_json(const json& j) {
    inverse::PlannerOptions o = LoopConfig::default_planner();
    if (j.contains("kind")) {
        const auto k = flow::parse_kind(j.at("kind").get<std::string>());
        if (!k) throw std::invalid_argument("unknown primitive kind '" + j.at("kind").get<std::string>() + "'");
        o.kind = *k;
    }
    o.n_paths = j.value("n_paths", o.n_paths);
    if (j.contains("amplitude")) {
        const auto m = j.at("amplitude").get<std::string>();
        if (m != "free" && m != "fixed") throw std::invalid_argument("amplitude mode must be free or fixed");
        o.amplitude = m == "free" ? inverse::AmplitudeMode::free : inverse::AmplitudeMode::fixed;
    }
    if (j.contains("gradient")) {
        const auto g = j.at("gradient").get<std::string>();
        if (g == "auto") o.gradient = inverse::GradientMode::automatic;
        else if (g == "fd") o.gradient = inverse::GradientMode::finite_difference;
        else if (g == "tangent") o.gradient = inverse::GradientMode::tangent;
        else throw std::invalid_argument("gradient mode must be auto, fd or tangent");
    }
    o.dt = j.value("dt", o.dt);
    o.substeps = j.value("substeps", o.substeps);
    o.fd_step = j.value("fd_step", o.fd_step);
    if (j.contains("fd_scheme")) {
        const auto f = j.at("fd_scheme").get<std::string>();
        if (f == "forward") o.fd_scheme = inverse::FdScheme::forward;
        else if (f == "central") o.fd_scheme = inverse::FdScheme::central;
        else throw std::invalid_argument("fd_scheme must be forward or central");
    }
    o.early_accept = j.value("early_accept", o.early_accept);
    o.exhaustive_seeds = j.value("exhaustive_seeds", o.exhaustive_seeds);
    if (j.contains("sqp")) {
        const auto& s = j.at("sqp");
        o.sqp.tolerance = s.value("tolerance", o.sqp.tolerance);
        o.sqp.max_iters = s.value("max_iters", o.sqp.max_iters);
        o.sqp.final_derivatives = s.value("final_derivatives", o.sqp.final_derivatives);
        o.sqp.line_refinement = s.value("line_refinement", o.sqp.line_refinement);
        o.sqp.feasibility_starts = s.value("feasibility_starts", o.sqp.feasibility_starts);
    }
    return o;
}

json to_json(const LoopConfig& c) {
    json per = json::array();
    for (const auto& s : c.perturbations) per.push_back({{"cycle", s.cycle}, {"perturbation", to_json(s.perturbation)}});
    return {{"mode", to_string(c.mode)},
            {"cycles", c.cycles},
            {"descent_iters", c.descent_iters},
            {"target", c.target},
            {"accept_threshold", c.accept_threshold},
            {"planner", to_json(c.planner)},
            {"constraints", inverse::to_json(c.constraints)},
            {"perturbations", per},
            {"density_region", c.density_region ? to_json(*c.density_region) : json(nullptr)},
            {"seed", c.seed}};
}

LoopConfig loop_config_from_json(const json& j) {
    LoopConfig c;
    c.mode = parse_run_mode(j.value("mode", to_string(c.mode)));
    c.cycles = j.value("cycles", c.cycles);
    c.descent_iters = j.value("descent_iters", c.descent_iters);
    c.target = j.value("target", c.target);
    c.accept_threshold = j.value("accept_threshold", c.accept_threshold);
    if (j.contains("planner")) c.planner = planner_options_from_json(j.at("planner"));
    if (j.contains("constraints")) c.constraints = inverse::constraints_from_json(j.at("constraints"), c.constraints.center_bounds);
    for (const auto& s : j.value("perturbations", json::array()))
        c.perturbations.push_back({s.at("cycle").get<int>(), perturbation_from_json(s.at("perturbation"))});
    if (j.contains("density_region") && !j.at("density_region").is_null())
        c.density_region = region_from_json(j.at("density_region"));
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

json to_json(const flow::ScanPlan& p) {
    json a = json::array();
    for (const auto& q : p.primitives)
        a.push_back({{"kind", flow::to_string(q.kind)},
                     {"center", {q.placement.center.x, q.placement.center.y}},
                     {"angle", q.placement.angle},
                     {"amplitude", q.placement.amplitude}});
    return a;
}

flow::ScanPlan plan_from_json(const json& j) {
    flow::ScanPlan p;
    for (const auto& q : j) {
        const auto k = flow::parse_kind(q.at("kind").get<std::string>());
        if (!k) throw std::invalid_argument("unknown primitive kind in plan");
        p.primitives.push_back({*k,
                                {{q.at("center").at(0).get<double>(), q.at("center").at(1).get<double>()},
                                 q.at("angle").get<double>(),
                                 q.at("amplitude").get<double>()}});
    }
    return p;
}

json to_json(const Event& e) { return {{"cycle", e.cycle}, {"kind", e.kind}, {"detail", e.detail}}; }

Event event_from_json(const json& j) {
    return {j.at("cycle").get<int>(), j.at("kind").get<std::string>(), j.value("detail", json::object())};
}

json to_json(const Frame& f) {
    json ev = json::array();
    for (const auto& e : f.events) ev.push_back(to_json(e));
    return {{"cycle", f.cycle},
            {"positions", points_json(f.positions)},
            {"plan", to_json(f.plan)},
            {"objective", number_or_null(f.objective)},
            {"predicted", number_or_null(f.predicted)},
            {"squareness", number_or_null(f.squareness)},
            {"density_ratio", number_or_null(f.density_ratio)},
            {"accepted", f.accepted},
            {"converged", f.converged},
            {"advections", f.advections},
            {"events", ev}};
}

Frame frame_from_json(const json& j) {
    Frame f;
    f.cycle = j.at("cycle").get<int>();
    f.positions = points_from(j.at("positions"));
    f.plan = plan_from_json(j.at("plan"));
    f.objective = number_or_nan(j.at("objective"));
    f.predicted = number_or_nan(j.value("predicted", json(nullptr)));
    f.squareness = number_or_nan(j.at("squareness"));
    f.density_ratio = number_or_nan(j.at("density_ratio"));
    f.accepted = j.value("accepted", false);
    f.converged = j.value("converged", false);
    f.advections = j.value("advections", 0L);
    for (const auto& e : j.value("events", json::array())) f.events.push_back(event_from_json(e));
    return f;
}

}  // namespace flowscribe::control
