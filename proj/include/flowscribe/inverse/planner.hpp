#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "flowscribe/flow/model.hpp"
#include "flowscribe/inverse/sqp.hpp"
#include "flowscribe/terms/objective.hpp"

namespace flowscribe::inverse {

struct KeepOut {
    Vec2 center;
    double radius = 1.0;
};

struct ConstraintSet {
    double d_min = 5.0;                       // between primitive centers, µm
    Rect center_bounds = Rect::centered(50, 50);
    std::vector<KeepOut> keepout;             // primitive centers stay outside these disks
    double a_min = 0.0, a_max = 1.0;
    double displacement_cap = 2.0;            // per particle per cycle, µm; <= 0 disables

    void validate() const;
};

ConstraintSet constraints_from_json(const nlohmann::json& j, const Rect& fov);
nlohmann::json to_json(const ConstraintSet& c);

/// Free: decision vector holds (cx, cy, angle, amplitude) per primitive.
/// Fixed: (cx, cy, angle) per primitive, amplitude pinned at a_max.
enum class AmplitudeMode { fixed, free };

/// Auto: analytic tangents for analytic kinds, finite differences through LUT primitives.
enum class GradientMode { automatic, finite_difference, tangent };

/// Forward differences reuse the base advection: dimension + 1 advections per gradient instead of 2 x dimension + 1,
/// at O(h) instead of O(h^2) truncation error.
enum class FdScheme { central, forward };

enum class SeedKind { warm, informed, random };
std::string to_string(SeedKind k);

struct WarmStart {
    Eigen::VectorXd theta;
    Eigen::MatrixXd hessian;  // optional; reused by the first SQP iteration when the size matches
    WarmStart() = default;
    WarmStart(Eigen::VectorXd t, Eigen::MatrixXd h = {}) : theta(std::move(t)), hessian(std::move(h)) {}
};

struct PlannerOptions {
    static SqpOptions default_sqp() {
        SqpOptions s;
        s.line_refinement = false;  // every extra derivative evaluation costs a finite-difference gradient
        return s;
    }

    flow::PrimitiveKind kind = flow::PrimitiveKind::linear_lut;
    std::size_t n_paths = 7;
    AmplitudeMode amplitude = AmplitudeMode::fixed;
    GradientMode gradient = GradientMode::automatic;
    double dt = 2.0;  // s per control cycle
    int substeps = 4;
    /// Finite-difference step: this times scan_length for centers, plain value for angle and amplitude.
    double fd_step = 1e-3;
    FdScheme fd_scheme = FdScheme::central;
    SqpOptions sqp = default_sqp();
    std::uint64_t seed = 0;
    /// Stop trying further seeds once one improves the current cost by this relative amount.
    double early_accept = 1e-3;
    bool exhaustive_seeds = false;

    std::size_t params_per_path() const { return amplitude == AmplitudeMode::free ? 4 : 3; }
    std::size_t dimension() const { return n_paths * params_per_path(); }
};

flow::ScanPlan decode(const Eigen::VectorXd& theta, const PlannerOptions& o, const ConstraintSet& c);
Eigen::VectorXd encode(const flow::ScanPlan& plan, const PlannerOptions& o);

struct SeedTrial {
    SeedKind kind = SeedKind::warm;
    bool feasible = false;
    double cost = 0.0;
    int iterations = 0;
    SqpStatus status = SqpStatus::max_iters;
};

struct PlanResult {
    flow::ScanPlan plan;
    Eigen::VectorXd theta;  // angles wrapped to (-pi, pi]
    Eigen::MatrixXd hessian;  // solver state for the next warm start
    double current_cost = 0.0;
    double predicted_cost = 0.0;
    double kkt_residual = 0.0;
    double max_violation = 0.0;
    double max_displacement = 0.0;
    int iterations = 0;
    bool converged = false;
    SeedKind seeded_from = SeedKind::warm;
    long advections = 0;          // forward advections of the whole configuration
    long tangent_advections = 0;  // advections with tangent propagation
    std::vector<SeedTrial> trials;
};

/// Places primitives next to the particles contributing most to the objective, pointing along their
/// descent direction, then repairs spacing by seeded jitter.
Eigen::VectorXd informed_seed(const flow::FlowModel& model, const ParticleConfig& a,
                              const terms::CompiledObjective& obj, const ConstraintSet& c, const PlannerOptions& o);

/// Uniform placements inside the center bounds respecting spacing and keep-outs where possible.
Eigen::VectorXd random_seed(const ConstraintSet& c, const PlannerOptions& o, std::uint64_t seed);

/// One control cycle: minimize f(advect(A, plan(theta))) subject to the constraint set, trying the warm
/// start, then the informed seed, then one random seed. Throws InfeasibleError if every seed is infeasible.
PlanResult plan_cycle(const flow::FlowModel& model, const ParticleConfig& a, const terms::CompiledObjective& obj,
                      const ConstraintSet& c, const PlannerOptions& o,
                      const std::optional<WarmStart>& warm = std::nullopt);

/// Constraint values at theta (same order as the solver sees them): spacing pairs, keep-outs, displacement caps.
Eigen::VectorXd constraint_values(const flow::FlowModel& model, const ParticleConfig& a, const Eigen::VectorXd& theta,
                                  const ConstraintSet& c, const PlannerOptions& o);

struct BaselineOptions {
    flow::PrimitiveKind kind = flow::PrimitiveKind::linear_lut;
    double threshold = 0.005;  // relative decrease required to accept a trial
    long max_evaluations = 20000;
    /// Control cycles; each ends at the first accepted trial or after max_trials_per_cycle. 0: no cycle limit.
    int cycles = 0;
    long max_trials_per_cycle = 1000;
    double dt = 2.0;
    int substeps = 4;
    std::uint64_t seed = 0;
    /// Stop once the objective is at or below this value (0: run the full budget).
    double target = 0.0;
};

struct BaselineTrace {
    ParticleConfig final;
    std::vector<long> evaluations;  // advection count at which each accepted step happened (first entry 0)
    std::vector<double> objective;  // objective after each accepted step (first entry: initial)
    long total_evaluations = 0;
    int cycles = 0;  // cycles completed, stalled ones included
};

/// Random search over single primitive placements, accepting only relative decreases above the threshold.
BaselineTrace baseline_random_search(const flow::FlowModel& model, const ParticleConfig& a,
                                     const terms::CompiledObjective& obj, const ConstraintSet& c,
                                     const BaselineOptions& o);

}  // namespace flowscribe::inverse
