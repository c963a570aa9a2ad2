#include "flowscribe/flow/model.hpp"

#include <cmath>
#include <stdexcept>

namespace flowscribe::flow {

std::string to_string(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::linear_lut: return "linear-lut";
        case PrimitiveKind::circular: return "circular";
        case PrimitiveKind::saddle: return "saddle";
        case PrimitiveKind::shear: return "shear";
    }
    return "unknown";
}

std::optional<PrimitiveKind> parse_kind(std::string_view s) {
    for (auto k : {PrimitiveKind::linear_lut, PrimitiveKind::circular, PrimitiveKind::saddle, PrimitiveKind::shear})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

ScanPlan operator+(const ScanPlan& a, const ScanPlan& b) {
    ScanPlan out = a;
    out.primitives.insert(out.primitives.end(), b.primitives.begin(), b.primitives.end());
    return out;
}

ScanPlan scaled_amplitudes(ScanPlan plan, double c) {
    for (auto& p : plan.primitives) p.placement.amplitude *= c;
    return plan;
}

FlowModel::FlowModel(std::shared_ptr<const FlowLUT> lut, double locality_radius)
    : lut_(std::move(lut)), radius_(locality_radius) {
    if (!(locality_radius > 0)) throw std::invalid_argument("locality radius must be positive");
}

Vec2 FlowModel::local_field(PrimitiveKind k, Vec2 q, Mat2* jac) const {
    if (k == PrimitiveKind::linear_lut) {
        if (!lut_) throw std::logic_error("linear-lut primitive requires a loaded LUT");
        return lut_->velocity(q, jac);
    }
    Mat2 base;
    switch (k) {
        case PrimitiveKind::circular: base = {0, -1, 1, 0}; break;
        case PrimitiveKind::saddle: base = {1, 0, 0, -1}; break;
        default: base = {0, 1, 0, 0}; break;
    }
    const double R = radius_;
    const double e = std::exp(-q.norm2() / (R * R));
    const Vec2 v0 = base * q * (e / R);
    if (jac) {
        // d(e)/dq = -2 q e / R^2
        const Vec2 g = q * (-2.0 / (R * R));
        *jac = base * (e / R) + Mat2{v0.x * g.x, v0.x * g.y, v0.y * g.x, v0.y * g.y};
    }
    return v0;
}

Vec2 FlowModel::primitive_velocity(const Primitive& prim, Vec2 p, PrimitiveJacobian* jac) const {
    const Placement& pl = prim.placement;
    const Mat2 R = Mat2::rotation(pl.angle);
    const Vec2 q = R.transposed() * (p - pl.center);
    Mat2 J0;
    const Vec2 v0 = local_field(prim.kind, q, jac ? &J0 : nullptr);
    const Vec2 Rv0 = R * v0;
    if (jac) {
        const Mat2 S{0, -1, 1, 0};
        jac->dp = R * J0 * R.transposed() * pl.amplitude;
        jac->dq[0] = {-jac->dp.a, -jac->dp.c};
        jac->dq[1] = {-jac->dp.b, -jac->dp.d};
        jac->dq[2] = R * (S * v0 - J0 * (S * q)) * pl.amplitude;
        jac->dq[3] = Rv0;
    }
    return Rv0 * pl.amplitude;
}

Vec2 FlowModel::superpose(const ScanPlan& plan, Vec2 p) const {
    Vec2 v;
    for (const auto& prim : plan.primitives) v += primitive_velocity(prim, p);
    return v;
}

namespace {

void check_step(double dt, int substeps) {
    if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
    if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
}

void check_velocity(Vec2 v) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw std::runtime_error("non-finite velocity during advection");
}

}  // namespace

AdvectResult advect(const FlowModel& model, const ParticleConfig& a, const ScanPlan& plan, double dt, int substeps) {
    check_step(dt, substeps);
    const double h = dt / substeps;
    AdvectResult out{a, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        Vec2 x = a.positions[i];
        for (int s = 0; s < substeps; ++s) {
            const Vec2 v = model.superpose(plan, x);
            check_velocity(v);
            x = a.fov.clamp(x + v * h);
        }
        out.config.positions[i] = x;
        out.max_displacement = std::max(out.max_displacement, distance(x, a.positions[i]));
    }
    return out;
}

AdvectTangent advect_tangent(const FlowModel& model, const ParticleConfig& a, const ScanPlan& plan, double dt,
                             int substeps) {
    check_step(dt, substeps);
    const double h = dt / substeps;
    const std::size_t np = plan.size();
    AdvectTangent out{{a, 0.0}, std::vector<std::vector<Vec2>>(a.size(), std::vector<Vec2>(4 * np))};
    std::vector<PrimitiveJacobian> jacs(np);
    for (std::size_t i = 0; i < a.size(); ++i) {
        Vec2 x = a.positions[i];
        auto& D = out.dx[i];
        for (int s = 0; s < substeps; ++s) {
            Vec2 v;
            Mat2 J;
            for (std::size_t k = 0; k < np; ++k) {
                v += model.primitive_velocity(plan.primitives[k], x, &jacs[k]);
                J = J + jacs[k].dp;
            }
            check_velocity(v);
            for (std::size_t k = 0; k < np; ++k)
                for (int c = 0; c < 4; ++c) {
                    Vec2& d = D[4 * k + c];
                    d = d + (J * d + jacs[k].dq[c]) * h;
                }
            const Vec2 moved = x + v * h;
            x = a.fov.clamp(moved);
            const bool cx = x.x != moved.x, cy = x.y != moved.y;
            if (cx || cy)
                for (auto& d : D) {
                    if (cx) d.x = 0;
                    if (cy) d.y = 0;
                }
        }
        out.result.config.positions[i] = x;
        out.result.max_displacement = std::max(out.result.max_displacement, distance(x, a.positions[i]));
    }
    return out;
}

}  // namespace flowscribe::flow
