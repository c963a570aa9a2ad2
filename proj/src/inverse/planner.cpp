#include "flowscribe/inverse/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace flowscribe::inverse {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using flow::PrimitiveKind;
using flow::ScanPlan;

std::string to_string(SeedKind k) {
    switch (k) {
        case SeedKind::warm: return "warm";
        case SeedKind::informed: return "informed";
        case SeedKind::random: return "random";
    }
    return "unknown";
}

void ConstraintSet::validate() const {
    if (!(d_min >= 0)) throw std::invalid_argument("d_min must be >= 0");
    if (!center_bounds.valid()) throw std::invalid_argument("center bounds must have positive size");
    if (!(a_min <= a_max)) throw std::invalid_argument("amplitude bounds are inverted");
    for (const auto& k : keepout)
        if (!(k.radius > 0)) throw std::invalid_argument("keep-out radius must be > 0");
}

ConstraintSet constraints_from_json(const nlohmann::json& j, const Rect& fov) {
    ConstraintSet c;
    c.center_bounds = fov;
    c.d_min = j.value("d_min", c.d_min);
    c.a_min = j.value("a_min", c.a_min);
    c.a_max = j.value("a_max", c.a_max);
    c.displacement_cap = j.value("displacement_cap", c.displacement_cap);
    if (j.contains("center_bounds")) {
        const auto& b = j.at("center_bounds");
        c.center_bounds = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
    }
    for (const auto& k : j.value("keepout", nlohmann::json::array()))
        c.keepout.push_back({{k.at("center").at(0).get<double>(), k.at("center").at(1).get<double>()},
                             k.at("radius").get<double>()});
    c.validate();
    return c;
}

nlohmann::json to_json(const ConstraintSet& c) {
    nlohmann::json ko = nlohmann::json::array();
    for (const auto& k : c.keepout) ko.push_back({{"center", {k.center.x, k.center.y}}, {"radius", k.radius}});
    const Rect& b = c.center_bounds;
    return {{"d_min", c.d_min},       {"a_min", c.a_min},   {"a_max", c.a_max},
            {"displacement_cap", c.displacement_cap}, {"keepout", ko}, {"center_bounds", {b.x0, b.y0, b.x1, b.y1}}};
}

ScanPlan decode(const VectorXd& theta, const PlannerOptions& o, const ConstraintSet& c) {
    const std::size_t k = o.params_per_path();
    if (static_cast<std::size_t>(theta.size()) != o.dimension())
        throw std::invalid_argument("decision vector has the wrong length");
    ScanPlan plan;
    for (std::size_t i = 0; i < o.n_paths; ++i) {
        const Index b = static_cast<Index>(i * k);
        const double amp = k == 4 ? theta(b + 3) : c.a_max;
        plan.primitives.push_back({o.kind, {{theta(b), theta(b + 1)}, theta(b + 2), amp}});
    }
    return plan;
}

VectorXd encode(const ScanPlan& plan, const PlannerOptions& o) {
    const std::size_t k = o.params_per_path();
    VectorXd t(static_cast<Index>(plan.size() * k));
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& p = plan.primitives[i].placement;
        const Index b = static_cast<Index>(i * k);
        t(b) = p.center.x;
        t(b + 1) = p.center.y;
        t(b + 2) = p.angle;
        if (k == 4) t(b + 3) = p.amplitude;
    }
    return t;
}

namespace {

double wrap_angle(double a) {
    a = std::remainder(a, 2 * kPi);
    return a <= -kPi ? a + 2 * kPi : a;
}

std::vector<Vec2> centers_of(const VectorXd& t, const PlannerOptions& o) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < o.n_paths; ++i) {
        const Index b = static_cast<Index>(i * o.params_per_path());
        out.push_back({t(b), t(b + 1)});
    }
    return out;
}

bool placement_ok(Vec2 p, const std::vector<Vec2>& placed, const ConstraintSet& c) {
    if (!c.center_bounds.contains(p)) return false;
    for (const auto& q : placed)
        if (distance(p, q) < c.d_min) return false;
    for (const auto& k : c.keepout)
        if (distance(p, k.center) < k.radius) return false;
    return true;
}

double default_amplitude(const ConstraintSet& c) { return 0.5 * (c.a_min + c.a_max); }

void write_path(VectorXd& t, std::size_t i, const PlannerOptions& o, Vec2 center, double angle, double amp) {
    const Index b = static_cast<Index>(i * o.params_per_path());
    t(b) = center.x;
    t(b + 1) = center.y;
    t(b + 2) = angle;
    if (o.params_per_path() == 4) t(b + 3) = amp;
}

Index pair_count(std::size_t n) { return static_cast<Index>(n * (n - 1) / 2); }

// Shared by the solver callback and constraint_values.
class CycleProblem {
public:
    CycleProblem(const flow::FlowModel& model, const ParticleConfig& a, const terms::CompiledObjective& obj,
                 const ConstraintSet& c, const PlannerOptions& o)
        : model_(model), a_(a), obj_(obj), c_(c), o_(o) {
        const std::size_t N = o.n_paths;
        m_pairs_ = pair_count(N);
        m_keep_ = static_cast<Index>(N * c.keepout.size());
        m_disp_ = c.displacement_cap > 0 ? static_cast<Index>(a.size()) : 0;
        tangent_ = o.gradient == GradientMode::tangent ||
                   (o.gradient == GradientMode::automatic && o.kind != PrimitiveKind::linear_lut);
    }

    Index m() const { return m_pairs_ + m_keep_ + m_disp_; }
    long advections = 0, tangent_advections = 0;

    Problem problem() {
        Problem p;
        const Index n = static_cast<Index>(o_.dimension());
        const std::size_t k = o_.params_per_path();
        p.n = n;
        p.m = m();
        p.lower = VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
        p.upper = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < o_.n_paths; ++i) {
            const Index b = static_cast<Index>(i * k);
            p.lower(b) = c_.center_bounds.x0;
            p.upper(b) = c_.center_bounds.x1;
            p.lower(b + 1) = c_.center_bounds.y0;
            p.upper(b + 1) = c_.center_bounds.y1;
            if (k == 4) {
                p.lower(b + 3) = c_.a_min;
                p.upper(b + 3) = c_.a_max;
            }
        }
        p.evaluate = [this](const VectorXd& t, bool deriv, Evaluation& e) { evaluate(t, deriv, e); };
        return p;
    }

    void evaluate(const VectorXd& t, bool deriv, Evaluation& e) {
        const Index n = t.size();
        const std::size_t np = a_.size();
        std::vector<Vec2> X;
        // dX[i][k]: derivative of particle i's final position with respect to decision k
        std::vector<std::vector<Vec2>> dX;
        if (!deriv) {
            X = advect(t).positions;
        } else if (tangent_) {
            auto tan = flow::advect_tangent(model_, a_, decode(t, o_, c_), o_.dt, o_.substeps);
            ++tangent_advections;
            X = tan.result.config.positions;
            dX.assign(np, std::vector<Vec2>(static_cast<std::size_t>(n)));
            const std::size_t k = o_.params_per_path();
            for (std::size_t i = 0; i < np; ++i)
                for (std::size_t j = 0; j < o_.n_paths; ++j)
                    for (std::size_t q = 0; q < k; ++q) dX[i][j * k + q] = tan.dx[i][4 * j + q];
        } else {
            X = advect(t).positions;
            dX.assign(np, std::vector<Vec2>(static_cast<std::size_t>(n)));
            const bool central = o_.fd_scheme == FdScheme::central;
            for (Index q = 0; q < n; ++q) {
                const double h = step(q);
                VectorXd tp = t;
                tp(q) += h;
                const auto Xp = advect(tp).positions;
                if (central) {
                    VectorXd tm = t;
                    tm(q) -= h;
                    const auto Xm = advect(tm).positions;
                    for (std::size_t i = 0; i < np; ++i) dX[i][static_cast<std::size_t>(q)] = (Xp[i] - Xm[i]) / (2 * h);
                } else {
                    for (std::size_t i = 0; i < np; ++i) dX[i][static_cast<std::size_t>(q)] = (Xp[i] - X[i]) / h;
                }
            }
        }

        std::vector<Vec2> gX;
        e.f = deriv ? obj_.value_and_gradient(X, gX) : obj_.evaluate(X);
        if (deriv) {
            e.grad = VectorXd::Zero(n);
            for (std::size_t i = 0; i < np; ++i)
                for (Index q = 0; q < n; ++q) e.grad(q) += dot(gX[i], dX[i][static_cast<std::size_t>(q)]);
        }

        e.c.resize(m());
        if (deriv) e.jac = MatrixXd::Zero(m(), n);
        const auto C = centers_of(t, o_);
        const std::size_t k = o_.params_per_path();
        Index row = 0;
        const double d2 = std::max(c_.d_min * c_.d_min, 1e-12);
        for (std::size_t i = 0; i < o_.n_paths; ++i)
            for (std::size_t j = i + 1; j < o_.n_paths; ++j, ++row) {
                const Vec2 d = C[i] - C[j];
                e.c(row) = d.norm2() / d2 - 1.0;
                if (deriv) {
                    const Index bi = static_cast<Index>(i * k), bj = static_cast<Index>(j * k);
                    e.jac(row, bi) = 2 * d.x / d2;
                    e.jac(row, bi + 1) = 2 * d.y / d2;
                    e.jac(row, bj) = -2 * d.x / d2;
                    e.jac(row, bj + 1) = -2 * d.y / d2;
                }
            }
        for (std::size_t i = 0; i < o_.n_paths; ++i)
            for (const auto& ko : c_.keepout) {
                const Vec2 d = C[i] - ko.center;
                const double r2 = ko.radius * ko.radius;
                e.c(row) = d.norm2() / r2 - 1.0;
                if (deriv) {
                    const Index bi = static_cast<Index>(i * k);
                    e.jac(row, bi) = 2 * d.x / r2;
                    e.jac(row, bi + 1) = 2 * d.y / r2;
                }
                ++row;
            }
        if (m_disp_ > 0) {
            const double cap2 = c_.displacement_cap * c_.displacement_cap;
            for (std::size_t i = 0; i < np; ++i, ++row) {
                const Vec2 d = X[i] - a_.positions[i];
                e.c(row) = 1.0 - d.norm2() / cap2;
                if (deriv)
                    for (Index q = 0; q < n; ++q)
                        e.jac(row, q) = -2 * dot(d, dX[i][static_cast<std::size_t>(q)]) / cap2;
            }
        }
        if (!std::isfinite(e.f)) throw std::runtime_error("non-finite objective at a planned configuration");
    }

    ParticleConfig advect(const VectorXd& t) {
        ++advections;
        return flow::advect(model_, a_, decode(t, o_, c_), o_.dt, o_.substeps).config;
    }

private:
    double step(Index q) const {
        const std::size_t slot = static_cast<std::size_t>(q) % o_.params_per_path();
        return slot < 2 ? o_.fd_step * model_.scan_length() : o_.fd_step;
    }

    const flow::FlowModel& model_;
    const ParticleConfig& a_;
    const terms::CompiledObjective& obj_;
    const ConstraintSet& c_;
    const PlannerOptions& o_;
    Index m_pairs_ = 0, m_keep_ = 0, m_disp_ = 0;
    bool tangent_ = false;
};

}  // namespace

VectorXd random_seed(const ConstraintSet& c, const PlannerOptions& o, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(c.center_bounds.x0, c.center_bounds.x1),
        uy(c.center_bounds.y0, c.center_bounds.y1), ua(-kPi, kPi);
    VectorXd t(static_cast<Index>(o.dimension()));
    std::vector<Vec2> placed;
    for (std::size_t i = 0; i < o.n_paths; ++i) {
        Vec2 p{ux(rng), uy(rng)};
        for (int tries = 0; tries < 1000 && !placement_ok(p, placed, c); ++tries) p = {ux(rng), uy(rng)};
        placed.push_back(p);
        write_path(t, i, o, p, ua(rng), default_amplitude(c));
    }
    return t;
}

VectorXd informed_seed(const flow::FlowModel& model, const ParticleConfig& a, const terms::CompiledObjective& obj,
                       const ConstraintSet& c, const PlannerOptions& o) {
    if (o.n_paths < 1) throw std::invalid_argument("need at least one primitive");
    const auto contrib = obj.contributions(a.positions);
    const auto grad = obj.gradient(a.positions);
    std::vector<std::size_t> order(a.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return contrib[i] > contrib[j]; });

    const double half = 0.5 * model.scan_length();
    VectorXd t(static_cast<Index>(o.dimension()));
    std::vector<Vec2> placed;
    std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
    int failures = 0;
    for (std::size_t i = 0; i < o.n_paths; ++i) {
        const std::size_t who = order.empty() ? 0 : order[i % order.size()];
        const Vec2 p = order.empty() ? c.center_bounds.center() : a.positions[who];
        Vec2 dir = order.empty() ? Vec2{1, 0} : -grad[who];
        dir = dir.norm() > 0 ? dir / dir.norm() : Vec2{1, 0};
        Vec2 center = c.center_bounds.clamp(p + dir * half);
        for (int tries = 0; !placement_ok(center, placed, c); ++tries) {
            if (++failures > 50) return random_seed(c, o, o.seed);
            const double rad = std::max(c.d_min, half) * (1 + 0.1 * tries);
            const double ang = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
            const double r = rad * std::sqrt(std::uniform_real_distribution<double>(0, 1)(rng));
            center = c.center_bounds.clamp(p + dir * half + Vec2{std::cos(ang), std::sin(ang)} * r);
        }
        placed.push_back(center);
        write_path(t, i, o, center, std::atan2(dir.y, dir.x), default_amplitude(c));
    }
    return t;
}

VectorXd constraint_values(const flow::FlowModel& model, const ParticleConfig& a, const VectorXd& theta,
                           const ConstraintSet& c, const PlannerOptions& o) {
    terms::CompiledObjective none(a.size(), 1.0, 1e-6, "none", {});
    CycleProblem cp(model, a, none, c, o);
    Evaluation e;
    cp.evaluate(theta, false, e);
    return e.c;
}

PlanResult plan_cycle(const flow::FlowModel& model, const ParticleConfig& a, const terms::CompiledObjective& obj,
                      const ConstraintSet& c, const PlannerOptions& o, const std::optional<WarmStart>& warm) {
    c.validate();
    if (o.n_paths < 1) throw std::invalid_argument("need at least one primitive");
    if (obj.n() != a.size()) throw std::invalid_argument("objective particle count does not match the configuration");
    if (!(o.dt > 0) || o.substeps < 1) throw std::invalid_argument("dt must be > 0 and substeps >= 1");

    CycleProblem cp(model, a, obj, c, o);
    const Problem prob = cp.problem();
    PlanResult out;
    out.current_cost = obj.evaluate(a);
    if (!std::isfinite(out.current_cost)) throw std::runtime_error("current objective is not finite");

    std::vector<std::pair<SeedKind, VectorXd>> seeds;
    if (warm && static_cast<std::size_t>(warm->theta.size()) == o.dimension())
        seeds.push_back({SeedKind::warm, warm->theta});
    seeds.push_back({SeedKind::informed, informed_seed(model, a, obj, c, o)});
    seeds.push_back({SeedKind::random, random_seed(c, o, o.seed)});

    std::optional<SqpResult> best;
    double best_viol = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        SeedTrial trial{seeds[s].first};
        try {
            SqpOptions so = o.sqp;
            so.seed = o.seed + s;
            if (seeds[s].first == SeedKind::warm) so.initial_hessian = warm->hessian;
            SqpResult r = minimize_constrained(prob, seeds[s].second, so);
            trial.feasible = true;
            trial.cost = r.f;
            trial.iterations = r.iterations;
            trial.status = r.status;
            if (!best || r.f < best->f) {
                best = r;
                out.seeded_from = seeds[s].first;
            }
        } catch (const InfeasibleError& e) {
            best_viol = std::min(best_viol, e.best_violation());
        }
        out.trials.push_back(trial);
        if (!o.exhaustive_seeds && best && best->f <= out.current_cost * (1 - o.early_accept)) break;
    }
    out.advections = cp.advections;
    out.tangent_advections = cp.tangent_advections;
    if (!best) throw InfeasibleError(best_viol, static_cast<int>(seeds.size()));

    out.theta = best->x;
    out.hessian = best->hessian;
    for (std::size_t i = 0; i < o.n_paths; ++i) {
        const Index b = static_cast<Index>(i * o.params_per_path() + 2);
        out.theta(b) = wrap_angle(out.theta(b));
    }
    out.plan = decode(out.theta, o, c);
    out.predicted_cost = best->f;
    out.kkt_residual = best->kkt_residual;
    out.max_violation = best->max_violation;
    out.iterations = best->iterations;
    out.converged = best->converged;
    out.max_displacement = flow::advect(model, a, out.plan, o.dt, o.substeps).max_displacement;
    ++out.advections;
    return out;
}

BaselineTrace baseline_random_search(const flow::FlowModel& model, const ParticleConfig& a,
                                     const terms::CompiledObjective& obj, const ConstraintSet& c,
                                     const BaselineOptions& o) {
    c.validate();
    std::mt19937_64 rng(o.seed);
    BaselineTrace tr;
    tr.final = a;
    double f = obj.evaluate(a);
    tr.evaluations.push_back(0);
    tr.objective.push_back(f);
    std::uniform_real_distribution<double> ua(-kPi, kPi), uamp(c.a_min, c.a_max), u01(0, 1);
    const double pad = 0.5 * model.scan_length();
    long trials = 0;
    auto end_cycle = [&] {
        ++tr.cycles;
        trials = 0;
    };
    while (tr.total_evaluations < o.max_evaluations && !(o.target > 0 && f <= o.target) &&
           !(o.cycles > 0 && tr.cycles >= o.cycles)) {
        if (o.max_trials_per_cycle > 0 && trials >= o.max_trials_per_cycle) {
            end_cycle();  // stall
            continue;
        }
        ++trials;
        // candidate centers: particle bounding box padded by half a scan length, inside the center bounds
        Rect box{tr.final.positions[0].x, tr.final.positions[0].y, tr.final.positions[0].x, tr.final.positions[0].y};
        for (const auto& p : tr.final.positions) {
            box.x0 = std::min(box.x0, p.x);
            box.y0 = std::min(box.y0, p.y);
            box.x1 = std::max(box.x1, p.x);
            box.y1 = std::max(box.y1, p.y);
        }
        box = {std::max(box.x0 - pad, c.center_bounds.x0), std::max(box.y0 - pad, c.center_bounds.y0),
               std::min(box.x1 + pad, c.center_bounds.x1), std::min(box.y1 + pad, c.center_bounds.y1)};
        const Vec2 center{box.x0 + u01(rng) * box.width(), box.y0 + u01(rng) * box.height()};
        const flow::ScanPlan plan{{{o.kind, {center, ua(rng), uamp(rng)}}}};
        bool kept_out = false;
        for (const auto& k : c.keepout) kept_out = kept_out || distance(center, k.center) < k.radius;
        if (kept_out) continue;  // rejected before any advection
        const auto r = flow::advect(model, tr.final, plan, o.dt, o.substeps);
        ++tr.total_evaluations;
        if (c.displacement_cap > 0 && r.max_displacement > c.displacement_cap) continue;
        const double fn = obj.evaluate(r.config);
        if (fn <= f * (1 - o.threshold)) {
            f = fn;
            tr.final = r.config;
            tr.evaluations.push_back(tr.total_evaluations);
            tr.objective.push_back(f);
            end_cycle();
        }
    }
    return tr;
}

}  // namespace flowscribe::inverse
