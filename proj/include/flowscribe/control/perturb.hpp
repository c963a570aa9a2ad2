#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/geometry.hpp"

namespace flowscribe::control {

enum class PerturbKind { displacements, scatter, triangle };
std::string to_string(PerturbKind k);
PerturbKind parse_perturb_kind(const std::string& s);  // "scatter", "triangle" / "collapse-to-triangle", "displacements"

struct Perturbation {
    PerturbKind kind = PerturbKind::scatter;
    /// Particles affected; unset means all.
    std::optional<std::vector<std::size_t>> indices;
    /// One vector per affected particle (kind displacements).
    std::vector<Vec2> displacements;
    /// Scatter radius in µm; <= 0 selects 30% of the fov diagonal.
    double magnitude = 0.0;
    std::uint64_t seed = 0;

    void validate(std::size_t n) const;
};

nlohmann::json to_json(const Perturbation& p);
Perturbation perturbation_from_json(const nlohmann::json& j);

/// Displaced configuration, clamped to the fov.
/// Scatter: uniform direction, radius uniform in [0, magnitude].
/// Triangle: project onto the perimeter of the upward equilateral triangle inscribed in the
/// affected particles' centroid-centered bounding circle.
ParticleConfig perturb(const ParticleConfig& a, const Perturbation& p);

/// Closest point on the segment [a, b].
Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b);

}  // namespace flowscribe::control
