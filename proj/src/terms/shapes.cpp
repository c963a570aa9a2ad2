#include "flowscribe/terms/shapes.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "form_util.hpp"

namespace flowscribe::terms {

TargetSet sample_edges(const std::vector<Edge>& edges, std::size_t m) {
    if (edges.empty()) throw std::invalid_argument("shape has no edges");
    if (m == 0) throw std::invalid_argument("shape sampling needs at least 1 point");
    const std::size_t e = edges.size();
    TargetSet out;
    for (std::size_t k = 0; k < e; ++k) {
        const std::size_t count = m / e + (k < m % e ? 1 : 0);
        for (std::size_t j = 0; j < count; ++j) {
            const double f = static_cast<double>(j) / static_cast<double>(count);
            out.points.push_back(edges[k].a + (edges[k].b - edges[k].a) * f);
            out.labels.push_back(edges[k].label);
        }
    }
    return out;
}

namespace {

std::vector<Edge> ring_edges(const std::vector<Vec2>& v, const std::string& label) {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back({v[i], v[(i + 1) % v.size()], label});
    return out;
}

}  // namespace

std::vector<Edge> polygon_edges(int sides, double r) {
    if (sides < 3) throw std::invalid_argument("polygon needs at least 3 sides");
    std::vector<Vec2> v;
    for (int k = 0; k < sides; ++k) v.push_back(rotate({r, 0.0}, 2 * kPi * k / sides));
    return ring_edges(v, "polygon");
}

std::vector<Edge> star_edges(int tips, double r_outer, double r_inner) {
    if (tips < 3) throw std::invalid_argument("star needs at least 3 points");
    std::vector<Vec2> v;
    for (int k = 0; k < 2 * tips; ++k) v.push_back(rotate({k % 2 == 0 ? r_outer : r_inner, 0.0}, kPi * k / tips));
    return ring_edges(v, "star");
}

std::vector<Edge> pentagram_edges(double r) {
    // inner vertices sit where the chords of the {5/2} star cross
    return star_edges(5, r, r * std::cos(2 * kPi / 5) / std::cos(kPi / 5));
}

std::vector<Edge> hexagon_trio_edges(double s) {
    const Vec2 centers[3] = {{0.0, 0.0}, {1.5 * s, std::sqrt(3.0) / 2 * s}, {3 * s, 0.0}};
    const Vec2 shift = (centers[0] + centers[1] + centers[2]) / 3.0;
    std::vector<Edge> out;
    for (int h = 0; h < 3; ++h) {
        std::vector<Vec2> v;
        for (int k = 0; k < 6; ++k) v.push_back(centers[h] - shift + rotate({s, 0.0}, kPi * k / 3));
        auto e = ring_edges(v, "hex" + std::to_string(h));
        out.insert(out.end(), e.begin(), e.end());
    }
    return out;
}

TargetSet sample_strokes(const std::vector<std::vector<Vec2>>& strokes, std::size_t m,
                         const std::vector<std::string>& labels) {
    std::vector<double> len(strokes.size(), 0.0);
    for (std::size_t k = 0; k < strokes.size(); ++k)
        for (std::size_t i = 1; i < strokes[k].size(); ++i) len[k] += distance(strokes[k][i - 1], strokes[k][i]);
    const double total = std::accumulate(len.begin(), len.end(), 0.0);
    if (!(total > 0)) throw std::invalid_argument("strokes have zero length");

    // largest-remainder allocation; ties go to the earlier stroke
    std::vector<std::size_t> count(strokes.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t k = 0; k < strokes.size(); ++k) {
        const double q = static_cast<double>(m) * len[k] / total;
        count[k] = static_cast<std::size_t>(std::floor(q));
        used += count[k];
        rem.push_back({q - std::floor(q), k});
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; used < m; ++i, ++used) ++count[rem[i % rem.size()].second];

    TargetSet out;
    for (std::size_t k = 0; k < strokes.size(); ++k) {
        if (count[k] == 0) continue;
        const auto& st = strokes[k];
        // points at the centers of count[k] equal arc-length bins
        const double gap = len[k] / static_cast<double>(count[k]);
        std::size_t seg = 0;
        double seg_start = 0.0;
        for (std::size_t j = 0; j < count[k]; ++j) {
            const double target = gap * (static_cast<double>(j) + 0.5);
            while (seg + 2 < st.size() && seg_start + distance(st[seg], st[seg + 1]) < target) {
                seg_start += distance(st[seg], st[seg + 1]);
                ++seg;
            }
            const double sl = distance(st[seg], st[seg + 1]);
            const double f = sl > 0 ? std::clamp((target - seg_start) / sl, 0.0, 1.0) : 0.0;
            out.points.push_back(st[seg] + (st[seg + 1] - st[seg]) * f);
            out.labels.push_back(k < labels.size() ? labels[k] : std::string());
        }
    }
    return out;
}

namespace {

TargetSet posed(TargetSet t, const dsl::Form& f) {
    const Vec2 c = detail::point(f, "center");
    const double a = deg_to_rad(detail::num(f, "angle", 0.0));
    for (auto& p : t.points) p = rotate(p, a) + c;
    return t;
}

bool is_shape_head(const std::string& h) {
    return h == "polygon" || h == "star" || h == "pentagram" || h == "hexagon-trio" || h == "text";
}

}  // namespace

TargetSet gen_shape(const dsl::Value& v, std::size_t m) {
    if (!v.is_form()) throw std::invalid_argument("shape must be a form");
    const dsl::Form& f = v.form();
    const std::string& h = f.head;
    using detail::num;
    if (h == "polygon") return posed(sample_edges(polygon_edges(static_cast<int>(num(f, "sides")), num(f, "r")), m), f);
    if (h == "star")
        return posed(sample_edges(star_edges(static_cast<int>(num(f, "points")), num(f, "r-outer"), num(f, "r-inner")), m),
                     f);
    if (h == "pentagram") return posed(sample_edges(pentagram_edges(num(f, "r")), m), f);
    if (h == "hexagon-trio") return posed(sample_edges(hexagon_trio_edges(num(f, "s")), m), f);
    if (h == "text") {
        if (f.args.empty() || !f.args[0].is_string()) throw std::invalid_argument("(text \"...\") needs a string");
        const auto layout = layout_text(f.args[0].string(), num(f, "height", 20.0), num(f, "tracking", 0.25));
        std::vector<std::string> labels;
        for (char c : layout.stroke_glyph) labels.emplace_back(1, c);
        return posed(sample_strokes(layout.strokes, m, labels), f);
    }
    throw std::invalid_argument("unknown shape (" + h + ")");
}

TargetSet resolve_targets(const dsl::Value& v, std::size_t m) {
    if (v.is_list()) {
        TargetSet t;
        t.points = detail::to_points(v);
        if (t.points.empty()) throw std::invalid_argument("target list is empty");
        return t;
    }
    if (v.is_form() && is_shape_head(v.form().head)) return gen_shape(v, m);
    return sample_curve(curve_from_value(v), std::max<std::size_t>(m, 2));
}

}  // namespace flowscribe::terms
