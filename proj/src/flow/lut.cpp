#include "flowscribe/flow/lut.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

namespace flowscribe::flow {

std::size_t FlowLUT::cells_for(double length, double spacing) {
    const double c = std::round(length / spacing);
    if (c < 1 || std::abs(c * spacing - length) > 1e-9 * length)
        throw std::invalid_argument("LUT extent must be a whole number of cells");
    return static_cast<std::size_t>(c);
}

FlowLUT::FlowLUT(Rect extent, double spacing, double scan_length, std::string generator, nlohmann::json params,
                 std::vector<Vec2> velocities)
    : extent_(extent),
      spacing_(spacing),
      scan_length_(scan_length),
      generator_(std::move(generator)),
      params_(std::move(params)),
      v_(std::move(velocities)) {
    if (!(spacing > 0)) throw std::invalid_argument("LUT spacing must be positive");
    if (!extent.valid()) throw std::invalid_argument("LUT extent must have positive size");
    nx_ = cells_for(extent.width(), spacing) + 1;
    ny_ = cells_for(extent.height(), spacing) + 1;
    if (v_.size() != nx_ * ny_) throw std::invalid_argument("LUT node count does not match its grid");
    if (!all_finite(v_)) throw std::invalid_argument("LUT contains non-finite vectors");
}

Vec2 FlowLUT::node_position(std::size_t i, std::size_t j) const {
    const Vec2 c = extent_.center();
    return {c.x + (static_cast<double>(i) - 0.5 * static_cast<double>(nx_ - 1)) * spacing_,
            c.y + (static_cast<double>(j) - 0.5 * static_cast<double>(ny_ - 1)) * spacing_};
}

namespace {

// Grid coordinate of p along one axis, snapped onto nodes within 1e-9 cells.
double grid_coord(double p, double center, double spacing, std::size_t n) {
    double u = (p - center) / spacing + 0.5 * static_cast<double>(n - 1);
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) u = r;
    return u;
}

}  // namespace

Vec2 FlowLUT::velocity(Vec2 p, Mat2* jac) const {
    if (jac) *jac = Mat2{};
    if (v_.empty()) return {};
    const Vec2 c = extent_.center();
    const double u = grid_coord(p.x, c.x, spacing_, nx_);
    const double w = grid_coord(p.y, c.y, spacing_, ny_);
    const double umax = static_cast<double>(nx_ - 1), wmax = static_cast<double>(ny_ - 1);
    if (!(u >= 0 && u <= umax && w >= 0 && w <= wmax)) return {};
    const std::size_t i = std::min(static_cast<std::size_t>(u), nx_ - 2);
    const std::size_t j = std::min(static_cast<std::size_t>(w), ny_ - 2);
    const double fx = u - static_cast<double>(i), fy = w - static_cast<double>(j);
    const Vec2 &v00 = node(i, j), &v10 = node(i + 1, j), &v01 = node(i, j + 1), &v11 = node(i + 1, j + 1);
    if (jac) {
        const Vec2 dx = ((v10 - v00) * (1 - fy) + (v11 - v01) * fy) / spacing_;
        const Vec2 dy = ((v01 - v00) * (1 - fx) + (v11 - v10) * fx) / spacing_;
        *jac = Mat2{dx.x, dy.x, dx.y, dy.y};
    }
    return v00 * ((1 - fx) * (1 - fy)) + v10 * (fx * (1 - fy)) + v01 * ((1 - fx) * fy) + v11 * (fx * fy);
}

nlohmann::json FlowLUT::header_json() const {
    return {{"magic", "FLUT"},
            {"version", 1},
            {"extent", {extent_.x0, extent_.y0, extent_.x1, extent_.y1}},
            {"spacing", spacing_},
            {"scan_length", scan_length_},
            {"generator", generator_},
            {"nx", nx_},
            {"ny", ny_},
            {"params", params_}};
}

Vec2 point_force_response(const std::string& generator, Vec2 r, double eps) {
    const double r2 = r.norm2() + eps * eps;
    if (generator == "darcy-point-force") {
        // F = e_x
        return Vec2{eps * eps / (kPi * r2 * r2) - 1.0 / (2 * kPi * r2), 0.0} + r * (r.x / (kPi * r2 * r2));
    }
    if (generator == "stokeslet-log") return Vec2{-std::log(r2), 0.0} + r * (r.x / r2);
    throw std::invalid_argument("unknown LUT generator " + generator);
}

Vec2 segment_response(const std::string& generator, Vec2 p, double L, double eps) {
    using Q = boost::math::quadrature::gauss<double, 10>;
    const int panels = std::max(1, static_cast<int>(std::ceil(L / (0.5 * eps))));
    const double w = L / panels;
    Vec2 sum;
    for (int k = 0; k < panels; ++k) {
        const double a = -0.5 * L + k * w, b = a + w;
        sum.x += Q::integrate([&](double s) { return point_force_response(generator, p - Vec2{s, 0}, eps).x; }, a, b);
        sum.y += Q::integrate([&](double s) { return point_force_response(generator, p - Vec2{s, 0}, eps).y; }, a, b);
    }
    return sum;
}

FlowLUT generate_synthetic_lut(const LutParams& p) {
    if (!(p.scan_length > 0) || !(p.epsilon > 0) || !(p.spacing > 0) || !(p.half_extent > 0))
        throw std::invalid_argument("LUT parameters must be positive");
    if (p.spacing > p.epsilon) throw std::invalid_argument("grid too coarse: spacing exceeds epsilon");
    if (2 * p.half_extent < 3 * p.scan_length)
        throw std::invalid_argument("LUT extent must cover at least 3x the scan length");
    point_force_response(p.generator, {}, p.epsilon);  // validates the id

    const Rect extent = Rect::centered(p.half_extent, p.half_extent);
    const std::size_t n = FlowLUT::cells_for(extent.width(), p.spacing) + 1;
    const double c = 0.5 * static_cast<double>(n - 1);
    const Vec2 mid = segment_response(p.generator, {}, p.scan_length, p.epsilon);
    const double scale = p.sign / mid.x;
    // evaluate the upper half and mirror: v_x even, v_y odd in y
    std::vector<Vec2> v(n * n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t jm = n - 1 - j;
        if (jm < j) break;
        const double y = (static_cast<double>(jm) - c) * p.spacing;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = (static_cast<double>(i) - c) * p.spacing;
            Vec2 u = segment_response(p.generator, {x, y}, p.scan_length, p.epsilon) * scale;
            if (jm == j) u.y = 0.0;
            v[jm * n + i] = u;
            v[j * n + i] = {u.x, -u.y};
        }
    }
    nlohmann::json params = {{"epsilon", p.epsilon},
                             {"half_extent", p.half_extent},
                             {"sign", p.sign},
                             {"normalization", "midpoint speed 1 at unit amplitude"},
                             {"quadrature", "composite Gauss-Legendre, 10 points per eps/2 panel"}};
    return FlowLUT(extent, p.spacing, p.scan_length, p.generator, std::move(params), std::move(v));
}

FlowLUT uniform_lut(Vec2 v, double half_extent, double spacing, double scan_length) {
    const Rect extent = Rect::centered(half_extent, half_extent);
    const std::size_t n = FlowLUT::cells_for(extent.width(), spacing) + 1;
    return FlowLUT(extent, spacing, scan_length, "uniform", {{"velocity", {v.x, v.y}}}, std::vector<Vec2>(n * n, v));
}

}  // namespace flowscribe::flow
