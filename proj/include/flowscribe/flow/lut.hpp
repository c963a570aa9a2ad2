#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/geometry.hpp"

namespace flowscribe::flow {

/// Gridded velocity response of the canonical linear scan path (segment on the x axis, centered at the origin).
class FlowLUT {
public:
    FlowLUT() = default;
    /// Nodes at center + (j - (n-1)/2) * spacing; extent must be a whole number of cells in each direction.
    FlowLUT(Rect extent, double spacing, double scan_length, std::string generator, nlohmann::json params,
            std::vector<Vec2> velocities);

    const Rect& extent() const { return extent_; }
    double spacing() const { return spacing_; }
    double scan_length() const { return scan_length_; }
    const std::string& generator() const { return generator_; }
    const nlohmann::json& params() const { return params_; }
    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    const std::vector<Vec2>& velocities() const { return v_; }

    Vec2 node_position(std::size_t i, std::size_t j) const;
    const Vec2& node(std::size_t i, std::size_t j) const { return v_[j * nx_ + i]; }

    /// Bilinear interpolation; zero outside the extent. With jac, also the (piecewise) spatial Jacobian.
    Vec2 velocity(Vec2 p, Mat2* jac = nullptr) const;

    nlohmann::json header_json() const;

    static std::size_t cells_for(double length, double spacing);

private:
    Rect extent_;
    double spacing_ = 1.0;
    double scan_length_ = 10.0;
    std::string generator_;
    nlohmann::json params_;
    std::size_t nx_ = 0, ny_ = 0;
    std::vector<Vec2> v_;
};

struct LutParams {
    double scan_length = 10.0;
    double epsilon = 1.0;
    double half_extent = 30.0;
    double spacing = 0.25;
    /// "darcy-point-force" (default) or "stokeslet-log".
    std::string generator = "darcy-point-force";
    /// Net transport sign along the scan axis at unit amplitude.
    double sign = 1.0;
};

/// Regularized point-force response for a unit force along +x at the origin.
Vec2 point_force_response(const std::string& generator, Vec2 r, double epsilon);

/// Integrates the point-force response along the segment [-L/2, L/2] x {0} (composite Gauss-Legendre, unnormalized).
Vec2 segment_response(const std::string& generator, Vec2 p, double scan_length, double epsilon);

/// Samples the segment response on a grid and normalizes the midpoint speed to 1.
/// Throws std::invalid_argument if spacing > epsilon or parameters are not positive.
FlowLUT generate_synthetic_lut(const LutParams& params);

/// A LUT with the same constant vector on every node (test fields).
FlowLUT uniform_lut(Vec2 v, double half_extent, double spacing, double scan_length = 10.0);

void save_lut(const FlowLUT& lut, const std::filesystem::path& path);

/// Quiver-plot table: a '#' header, then "x y vx vy" per node for every `stride`-th node in each direction.
void write_quiver(const FlowLUT& lut, std::ostream& out, std::size_t stride = 1);
FlowLUT load_lut(const std::filesystem::path& path);
/// Sidecar path used by save_lut: `<path>.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace flowscribe::flow
