#include "flowscribe/terms/region.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "form_util.hpp"

namespace flowscribe::terms {

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Region Region::disk(Vec2 c, double r, double w) {
    Region g;
    g.kind = RegionKind::disk;
    g.center = c;
    g.r = r;
    g.w = w;
    return g;
}

Region Region::rect(Vec2 c, Vec2 size, double w) {
    Region g;
    g.kind = RegionKind::rect;
    g.center = c;
    g.size = size;
    g.w = w;
    return g;
}

Region Region::polygon(std::vector<Vec2> vertices, double w) {
    if (vertices.size() < 3) throw std::invalid_argument("polygon region needs at least 3 vertices");
    Region g;
    g.kind = RegionKind::polygon;
    g.vertices = std::move(vertices);
    g.w = w;
    g.center = g.anchor();
    return g;
}

namespace {

double signed_area(const std::vector<Vec2>& v) {
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
    return 0.5 * a;
}

bool inside_polygon(const std::vector<Vec2>& v, Vec2 p) {
    bool in = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
            if (p.x < x) in = !in;
        }
    }
    return in;
}

struct EdgeHit {
    double d = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    Vec2 q;
};

EdgeHit closest_edge(const std::vector<Vec2>& v, Vec2 p) {
    EdgeHit h;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 a = v[i], b = v[(i + 1) % v.size()];
        const Vec2 ab = b - a;
        const double t = std::clamp(dot(p - a, ab) / ab.norm2(), 0.0, 1.0);
        const Vec2 q = a + ab * t;
        const double d = distance(p, q);
        // a shared vertex reached from two edges is not a second candidate
        if (d < h.d) {
            if (distance(q, h.q) > 1e-9) h.second = h.d;
            h.d = d;
            h.q = q;
        } else if (d < h.second && distance(q, h.q) > 1e-9) {
            h.second = d;
        }
    }
    return h;
}

}  // namespace

double Region::area() const {
    switch (kind) {
        case RegionKind::disk: return kPi * r * r;
        case RegionKind::rect: return size.x * size.y;
        case RegionKind::polygon: return std::abs(signed_area(vertices));
    }
    return 0.0;
}

bool Region::contains(Vec2 p) const {
    switch (kind) {
        case RegionKind::disk: return (p - center).norm2() <= r * r;
        case RegionKind::rect:
            return std::abs(p.x - center.x) <= 0.5 * size.x && std::abs(p.y - center.y) <= 0.5 * size.y;
        case RegionKind::polygon: return inside_polygon(vertices, p);
    }
    return false;
}

Vec2 Region::anchor() const {
    if (kind != RegionKind::polygon) return center;
    const double a = signed_area(vertices);
    Vec2 c;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec2 p = vertices[i], q = vertices[(i + 1) % vertices.size()];
        c += (p + q) * cross(p, q);
    }
    return c / (6.0 * a);
}

double Region::membership(Vec2 p, Vec2* grad) const {
    switch (kind) {
        case RegionKind::disk: {
            const Vec2 d = p - center;
            const double rho = d.norm();
            const double s = logistic((r - rho) / w);
            if (grad) *grad = rho > 0 ? d * (-s * (1 - s) / (w * rho)) : Vec2{};
            return s;
        }
        case RegionKind::rect: {
            // product of four edge sigmoids, smooth everywhere
            const double dx = p.x - center.x, dy = p.y - center.y;
            const double hw = 0.5 * size.x, hh = 0.5 * size.y;
            const double s[4] = {logistic((dx + hw) / w), logistic((hw - dx) / w), logistic((dy + hh) / w),
                                 logistic((hh - dy) / w)};
            const double m = s[0] * s[1] * s[2] * s[3];
            if (grad) {
                const double gx = (1 - s[0]) - (1 - s[1]);
                const double gy = (1 - s[2]) - (1 - s[3]);
                *grad = Vec2{gx, gy} * (m / w);
            }
            return m;
        }
        case RegionKind::polygon: {
            const EdgeHit h = closest_edge(vertices, p);
            const double sign = inside_polygon(vertices, p) ? 1.0 : -1.0;
            const double sd = sign * h.d;
            const double s = logistic(sd / w);
            if (grad) *grad = h.d > 0 ? (p - h.q) * (sign * s * (1 - s) / (w * h.d)) : Vec2{};
            return s;
        }
    }
    return 0.0;
}

double Region::smooth_margin(Vec2 p) const {
    switch (kind) {
        case RegionKind::disk: return distance(p, center);
        case RegionKind::rect: return std::numeric_limits<double>::infinity();
        case RegionKind::polygon: {
            const EdgeHit h = closest_edge(vertices, p);
            return std::min(h.second - h.d, h.d);
        }
    }
    return 0.0;
}

Region region_from_value(const dsl::Value& v) {
    if (!v.is_form()) throw std::invalid_argument("region must be a form such as (disk :r 5)");
    const dsl::Form& f = v.form();
    const double w = detail::num(f, "w", 1.0);
    if (!(w > 0)) throw std::invalid_argument("region edge width must be > 0");
    if (f.head == "disk") return Region::disk(detail::point(f, "center"), detail::num(f, "r"), w);
    if (f.head == "rect") return Region::rect(detail::point(f, "center"), detail::point(f, "size"), w);
    if (f.head == "polygon-mask") {
        const dsl::Value* pts = f.find("points");
        if (!pts) throw std::invalid_argument("polygon-mask requires :points");
        return Region::polygon(detail::to_points(*pts), w);
    }
    throw std::invalid_argument("unknown region (" + f.head + ")");
}

}  // namespace flowscribe::terms
