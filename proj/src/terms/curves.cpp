#include "flowscribe/terms/curves.hpp"

#include <stdexcept>

#include "form_util.hpp"

namespace flowscribe::terms {

using detail::num;

bool CurveDef::is_closed() const {
    switch (kind) {
        case CurveKind::sinusoid:
        case CurveKind::spiral:
        case CurveKind::segment: return false;
        case CurveKind::chain: return closed;
        default: return true;
    }
}

bool CurveDef::is_polygonal() const {
    return kind == CurveKind::polygon || kind == CurveKind::star || kind == CurveKind::segment ||
           kind == CurveKind::chain;
}

CurveDef curve_from_value(const dsl::Value& v) {
    if (!v.is_form()) throw std::invalid_argument("curve must be a form such as (circle :r 20)");
    const dsl::Form& f = v.form();
    CurveDef c;
    const std::string& h = f.head;
    if (h == "circle") {
        c.kind = CurveKind::circle;
        c.r = num(f, "r");
    } else if (h == "ellipse") {
        c.kind = CurveKind::ellipse;
        c.a = num(f, "a");
        c.b = num(f, "b");
    } else if (h == "sinusoid") {
        c.kind = CurveKind::sinusoid;
        c.amplitude = num(f, "amplitude");
        c.period = num(f, "period");
        c.length = num(f, "length");
    } else if (h == "spiral") {
        c.kind = CurveKind::spiral;
        c.a = num(f, "a");
        c.pitch = num(f, "pitch");
        c.turns = num(f, "turns");
    } else if (h == "heart") {
        c.kind = CurveKind::heart;
        c.size = num(f, "size");
    } else if (h == "polygon") {
        c.kind = CurveKind::polygon;
        c.sides = static_cast<int>(num(f, "sides"));
        c.r = num(f, "r");
        if (c.sides < 3) throw std::invalid_argument("polygon needs at least 3 sides");
    } else if (h == "star") {
        c.kind = CurveKind::star;
        c.sides = static_cast<int>(num(f, "points"));
        c.r = num(f, "r-outer");
        c.r_inner = num(f, "r-inner");
        if (c.sides < 3) throw std::invalid_argument("star needs at least 3 points");
    } else if (h == "segment") {
        c.kind = CurveKind::segment;
        c.from = detail::point(f, "from");
        c.to = detail::point(f, "to");
    } else if (h == "chain") {
        c.kind = CurveKind::chain;
        const dsl::Value* pts = f.find("points");
        if (!pts) throw std::invalid_argument("chain requires :points");
        c.points = detail::to_points(*pts);
        c.closed = detail::flag(f, "closed");
        if (c.points.size() < 2) throw std::invalid_argument("chain needs at least 2 points");
    } else {
        throw std::invalid_argument("unknown curve (" + h + ")");
    }
    if (h != "segment") {
        c.center = detail::point(f, "center");
        c.angle = deg_to_rad(num(f, "angle", 0.0));
    }
    return c;
}

namespace {

Vec2 place(const CurveDef& c, Vec2 local) { return rotate(local, c.angle) + c.center; }

Vec2 smooth_local(const CurveDef& c, double t) {
    switch (c.kind) {
        case CurveKind::circle: {
            const double th = 2 * kPi * t;
            return {c.r * std::cos(th), c.r * std::sin(th)};
        }
        case CurveKind::ellipse: {
            const double th = 2 * kPi * t;
            return {c.a * std::cos(th), c.b * std::sin(th)};
        }
        case CurveKind::sinusoid: {
            const double x = (t - 0.5) * c.length;
            return {x, c.amplitude * std::sin(2 * kPi * x / c.period)};
        }
        case CurveKind::spiral: {
            const double th = 2 * kPi * c.turns * t;
            const double r = c.a + c.pitch * th / (2 * kPi);
            return {r * std::cos(th), r * std::sin(th)};
        }
        case CurveKind::heart: {
            const double th = 2 * kPi * t;
            const double s = std::sin(th);
            return {c.size * s * s * s,
                    c.size * (13 * std::cos(th) - 5 * std::cos(2 * th) - 2 * std::cos(3 * th) - std::cos(4 * th)) /
                        16.0};
        }
        default: break;
    }
    throw std::logic_error("not a smooth curve");
}

}  // namespace

std::vector<Vec2> curve_vertices(const CurveDef& c) {
    std::vector<Vec2> local;
    switch (c.kind) {
        case CurveKind::polygon:
            for (int k = 0; k < c.sides; ++k) local.push_back(rotate({c.r, 0.0}, 2 * kPi * k / c.sides));
            break;
        case CurveKind::star:
            for (int k = 0; k < 2 * c.sides; ++k)
                local.push_back(rotate({k % 2 == 0 ? c.r : c.r_inner, 0.0}, kPi * k / c.sides));
            break;
        case CurveKind::segment: return {c.from, c.to};
        case CurveKind::chain: local = c.points; break;
        default: throw std::logic_error("not a polygonal curve");
    }
    for (auto& p : local) p = place(c, p);
    return local;
}

Vec2 curve_point(const CurveDef& c, double t) {
    if (!c.is_polygonal()) return place(c, smooth_local(c, t));
    auto v = curve_vertices(c);
    if (c.is_closed()) v.push_back(v.front());
    const double u = std::clamp(t, 0.0, 1.0) * static_cast<double>(v.size() - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(u), v.size() - 2);
    const double f = u - static_cast<double>(i);
    return v[i] + (v[i + 1] - v[i]) * f;
}

std::vector<Vec2> dense_polyline(const CurveDef& c, std::size_t k) {
    if (c.is_polygonal()) {
        auto v = curve_vertices(c);
        if (c.is_closed()) v.push_back(v.front());
        return v;
    }
    std::vector<Vec2> out(k + 1);
    for (std::size_t i = 0; i <= k; ++i) out[i] = curve_point(c, static_cast<double>(i) / static_cast<double>(k));
    if (c.is_closed()) out.back() = out.front();
    return out;
}

namespace {

constexpr std::size_t kDense = 1 << 16;

std::vector<double> cumulative(const std::vector<Vec2>& poly) {
    std::vector<double> s(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) s[i] = s[i - 1] + distance(poly[i - 1], poly[i]);
    return s;
}

}  // namespace

double curve_length(const CurveDef& c) { return cumulative(dense_polyline(c, kDense)).back(); }

TargetSet sample_curve(const CurveDef& c, std::size_t m) {
    if (m < 2) throw std::invalid_argument("curve sampling needs at least 2 points");
    const auto poly = dense_polyline(c, kDense);
    const auto s = cumulative(poly);
    const double total = s.back();
    if (!(total > 1e-12)) throw std::invalid_argument("degenerate curve: zero length");
    const bool closed = c.is_closed();
    const double gap = total / static_cast<double>(closed ? m : m - 1);
    const std::size_t segs = poly.size() - 1;

    TargetSet out;
    out.points.reserve(m);
    std::size_t j = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double target = std::min(gap * static_cast<double>(i), total);
        while (j + 1 < segs && s[j + 1] < target) ++j;
        const double len = s[j + 1] - s[j];
        const double f = len > 0 ? std::clamp((target - s[j]) / len, 0.0, 1.0) : 0.0;
        if (c.is_polygonal()) {
            out.points.push_back(poly[j] + (poly[j + 1] - poly[j]) * f);
        } else {
            const double t = (static_cast<double>(j) + f) / static_cast<double>(segs);
            out.points.push_back(curve_point(c, t));
        }
    }
    if (!closed) out.points.back() = poly.back();
    return out;
}

}  // namespace flowscribe::terms
