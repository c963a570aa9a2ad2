#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowscribe/flow/lut.hpp"
#include "flowscribe/geometry.hpp"

namespace flowscribe::flow {

enum class PrimitiveKind { linear_lut, circular, saddle, shear };

std::string to_string(PrimitiveKind k);
/// Accepts "linear-lut", "circular", "saddle", "shear".
std::optional<PrimitiveKind> parse_kind(std::string_view s);

struct Placement {
    Vec2 center;
    double angle = 0.0;  // radians
    double amplitude = 0.0;
    bool operator==(const Placement&) const = default;
};

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::linear_lut;
    Placement placement;
    bool operator==(const Primitive&) const = default;
};

struct ScanPlan {
    std::vector<Primitive> primitives;
    std::size_t size() const { return primitives.size(); }
    bool operator==(const ScanPlan&) const = default;
};

/// Concatenation (superposition of both plans).
ScanPlan operator+(const ScanPlan& a, const ScanPlan& b);
ScanPlan scaled_amplitudes(ScanPlan plan, double c);

/// Sensitivity of a primitive's velocity at one point.
struct PrimitiveJacobian {
    Mat2 dp;                 // d v / d p
    std::array<Vec2, 4> dq;  // d v / d (cx, cy, angle, amplitude)
};

/// Everything the forward model needs: the LUT for linear primitives and the analytic locality radius.
class FlowModel {
public:
    FlowModel() = default;
    explicit FlowModel(std::shared_ptr<const FlowLUT> lut, double locality_radius = 5.0);

    const FlowLUT* lut() const { return lut_.get(); }
    double locality_radius() const { return radius_; }
    double scan_length() const { return lut_ ? lut_->scan_length() : 2.0 * radius_; }

    /// World-frame velocity amplitude * R v0(R^T (p - c)). Throws for linear-lut without a LUT.
    Vec2 primitive_velocity(const Primitive& prim, Vec2 p, PrimitiveJacobian* jac = nullptr) const;
    Vec2 superpose(const ScanPlan& plan, Vec2 p) const;

private:
    Vec2 local_field(PrimitiveKind k, Vec2 q, Mat2* jac) const;

    std::shared_ptr<const FlowLUT> lut_;
    double radius_ = 5.0;
};

struct AdvectResult {
    ParticleConfig config;
    double max_displacement = 0.0;  // largest per-particle displacement over the call, µm
};

/// Explicit Euler substeps x <- x + v(x) dt/substeps, clamped to the field of view after each substep.
/// Throws std::runtime_error on a non-finite velocity.
AdvectResult advect(const FlowModel& model, const ParticleConfig& a, const ScanPlan& plan, double dt, int substeps);

/// Forward advection with tangent propagation: dx_i/dq for q = (cx, cy, angle, amplitude) of every primitive.
/// Derivatives through LUT primitives use the piecewise bilinear Jacobian.
struct AdvectTangent {
    AdvectResult result;
    std::vector<std::vector<Vec2>> dx;  // [particle][4 * primitive + k]
};
AdvectTangent advect_tangent(const FlowModel& model, const ParticleConfig& a, const ScanPlan& plan, double dt,
                             int substeps);

}  // namespace flowscribe::flow
