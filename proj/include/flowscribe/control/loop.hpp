#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/control/perturb.hpp"
#include "flowscribe/flow/model.hpp"
#include "flowscribe/inverse/planner.hpp"
#include "flowscribe/terms/objective.hpp"
#include "flowscribe/terms/region.hpp"

namespace flowscribe::control {

struct ScheduledPerturbation {
    int cycle = 1;  // applied before planning this cycle
    Perturbation perturbation;
};

/// inverse: plan scan paths and advect. potential: move particles directly along the objective gradient
/// (no actuation model), a short descent per cycle.
enum class RunMode { inverse, potential };
std::string to_string(RunMode m);
RunMode parse_run_mode(const std::string& s);

struct LoopConfig {
    /// Per-cycle planner budget: a few warm-started SQP iterations, no derivatives after the last step.
    static inverse::PlannerOptions default_planner();

    RunMode mode = RunMode::inverse;
    int cycles = 60;
    /// Descent iterations per cycle in potential mode.
    int descent_iters = 50;
    /// Stop once the objective is at or below this value; <= 0 disables.
    double target = 0.0;
    /// Minimum relative predicted improvement for applying a plan.
    double accept_threshold = 1e-3;
    inverse::PlannerOptions planner = default_planner();
    inverse::ConstraintSet constraints;
    std::vector<ScheduledPerturbation> perturbations;
    /// Region for the density-ratio trace.
    std::optional<terms::Region> density_region;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Event {
    int cycle = 0;
    std::string kind;  // perturbation, reseed, stall, infeasible, hold
    nlohmann::json detail = nlohmann::json::object();
};

struct Frame {
    int cycle = 0;
    std::vector<Vec2> positions;
    flow::ScanPlan plan;  // applied plan; empty when nothing moved
    double objective = 0.0;
    double squareness = 0.0;     // NaN below 4 particles
    double density_ratio = 0.0;  // NaN without a region
    bool accepted = false;
    /// Last frame of a run that reached its target (or, in potential mode, a stationary point).
    bool converged = false;
    double predicted = 0.0;
    long advections = 0;
    std::vector<Event> events;
};

struct RunRecord {
    std::vector<Frame> frames;  // frame 0 is the initial state
    std::uint64_t seed = 0;
    long total_advections = 0;
    std::string stop_reason;  // cycles, target, converged, cancelled
    Rect fov;

    std::vector<double> objective_trace() const;
    std::vector<double> squareness_trace() const;
    std::vector<double> density_trace() const;
    std::vector<Event> events() const;
    ParticleConfig final_config() const;
};

/// Optional callbacks for live runs.
struct LoopHooks {
    std::function<void(const Frame&)> on_frame;
    /// Drained at the start of each cycle; returned perturbations apply to that cycle.
    std::function<std::vector<Perturbation>()> pending;
    std::function<bool()> cancelled;
};

/// Closed loop: per cycle apply due perturbations, plan, apply the plan only if it predicts at least
/// accept_threshold relative improvement (otherwise re-seed once, else record a stall), advect, record.
RunRecord run_closed_loop(const flow::FlowModel& model, const ParticleConfig& initial,
                          const terms::CompiledObjective& obj, const LoopConfig& cfg, const LoopHooks& hooks = {});

/// Potential mode: per cycle apply due perturbations, then run at most descent_iters L-BFGS iterations.
/// Stops once a descent converges and no scheduled perturbation is still ahead.
RunRecord run_descent_loop(const ParticleConfig& initial, const terms::CompiledObjective& obj, const LoopConfig& cfg,
                           const LoopHooks& hooks = {});

/// Region of the first region.density term, if any.
std::optional<terms::Region> density_region_of(const dsl::ObjectiveSpec& spec);

nlohmann::json to_json(const terms::Region& r);
terms::Region region_from_json(const nlohmann::json& j);
nlohmann::json to_json(const inverse::PlannerOptions& o);
inverse::PlannerOptions planner_options_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LoopConfig& c);
LoopConfig loop_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const flow::ScanPlan& p);
flow::ScanPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);
/// One archive record: {cycle, positions, plan, objective, squareness, density_ratio, events, ...}.
nlohmann::json to_json(const Frame& f);
Frame frame_from_json(const nlohmann::json& j);

}  // namespace flowscribe::control
