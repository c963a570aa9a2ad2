#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace flowscribe {

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    constexpr bool operator==(const Vec2&) const = default;

    double norm() const { return std::hypot(x, y); }
    constexpr double norm2() const { return x * x + y * y; }
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Counter-clockwise rotation by `angle` radians.
inline Vec2 rotate(Vec2 v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// 2x2 matrix, row-major.
struct Mat2 {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    constexpr Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    constexpr Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    constexpr Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
    constexpr Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
    constexpr Mat2 transposed() const { return {a, c, b, d}; }

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 rotation(double angle) {
        const double cs = std::cos(angle);
        const double sn = std::sin(angle);
        return {cs, -sn, sn, cs};
    }
};

/// Axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    constexpr double width() const { return x1 - x0; }
    constexpr double height() const { return y1 - y0; }
    constexpr double area() const { return width() * height(); }
    constexpr Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    double diagonal() const { return std::hypot(width(), height()); }
    constexpr bool valid() const { return x1 > x0 && y1 > y0; }
    constexpr bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    Vec2 clamp(Vec2 p) const { return {std::clamp(p.x, x0, x1), std::clamp(p.y, y0, y1)}; }

    static constexpr Rect centered(double half_w, double half_h) { return {-half_w, -half_h, half_w, half_h}; }
    constexpr bool operator==(const Rect&) const = default;
};

/// Particle positions (µm) inside a field of view.
struct ParticleConfig {
    std::vector<Vec2> positions;
    Rect fov = Rect::centered(50.0, 50.0);

    std::size_t size() const { return positions.size(); }
    bool operator==(const ParticleConfig&) const = default;
};

inline Vec2 centroid(const std::vector<Vec2>& pts) {
    if (pts.empty()) throw std::invalid_argument("centroid of empty point set");
    Vec2 c;
    for (const auto& p : pts) c += p;
    return c / static_cast<double>(pts.size());
}

inline bool all_finite(const std::vector<Vec2>& pts) {
    return std::all_of(pts.begin(), pts.end(),
                       [](Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

}  // namespace flowscribe
