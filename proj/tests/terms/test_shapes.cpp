#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "flowscribe/dsl/parser.hpp"
#include "flowscribe/terms/shapes.hpp"

using namespace flowscribe;
using namespace flowscribe::terms;

namespace {

TargetSet shape(const std::string& text, std::size_t m) {
    auto r = dsl::read_sexpr(text);
    REQUIRE(r.value);
    return gen_shape(*r.value, m);
}

bool on_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double t = std::clamp(dot(p - a, ab) / ab.norm2(), 0.0, 1.0);
    return distance(p, a + ab * t) < 1e-9;
}

}  // namespace

TEST_CASE("hexagon trio: 90 points, 5 per edge, touching hexagons") {
    const double s = 10;
    auto edges = hexagon_trio_edges(s);
    REQUIRE(edges.size() == 18);
    auto t = sample_edges(edges, 90);
    REQUIRE(t.size() == 90);
    for (std::size_t e = 0; e < 18; ++e) {
        int count = 0;
        for (std::size_t k = 5 * e; k < 5 * e + 5; ++k) count += on_segment(t.points[k], edges[e].a, edges[e].b);
        CHECK(count == 5);
    }
    // hexagon centers from their vertices
    std::map<std::string, Vec2> center;
    for (const auto& e : edges) center[e.label] += e.a / 6.0;
    CHECK(std::abs(distance(center["hex0"], center["hex1"]) - 10 * std::sqrt(3.0)) < 1e-9);
    CHECK(std::abs(distance(center["hex1"], center["hex2"]) - 10 * std::sqrt(3.0)) < 1e-9);
    CHECK(std::abs(distance(center["hex0"], center["hex2"]) - 30) < 1e-9);
    // the offsets between centers are the declared ones
    CHECK(std::abs(center["hex1"].x - center["hex0"].x - 15) < 1e-9);
    CHECK(std::abs(center["hex1"].y - center["hex0"].y - std::sqrt(75.0)) < 1e-9);
    // recentered union
    CHECK((center["hex0"] + center["hex1"] + center["hex2"]).norm() < 1e-9);
    // exactly one shared edge between touching hexagons
    auto same = [](const Edge& a, const Edge& b) {
        return (distance(a.a, b.a) < 1e-9 && distance(a.b, b.b) < 1e-9) ||
               (distance(a.a, b.b) < 1e-9 && distance(a.b, b.a) < 1e-9);
    };
    int shared01 = 0, shared02 = 0;
    for (const auto& a : edges)
        for (const auto& b : edges) {
            if (a.label == "hex0" && b.label == "hex1") shared01 += same(a, b);
            if (a.label == "hex0" && b.label == "hex2") shared02 += same(a, b);
        }
    CHECK(shared01 == 1);
    CHECK(shared02 == 0);
}

TEST_CASE("round-robin remainder goes to the first edges") {
    auto t = sample_edges(polygon_edges(3, 10), 8);  // 3, 3, 2
    REQUIRE(t.size() == 8);
    const auto e = polygon_edges(3, 10);
    CHECK(on_segment(t.points[2], e[0].a, e[0].b));
    CHECK(on_segment(t.points[5], e[1].a, e[1].b));
    CHECK(on_segment(t.points[7], e[2].a, e[2].b));
}

TEST_CASE("five-point star has 10 alternating vertices with 5-fold symmetry") {
    auto e = star_edges(5, 20, 8);
    REQUIRE(e.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) CHECK(std::abs(e[k].a.norm() - (k % 2 == 0 ? 20.0 : 8.0)) < 1e-12);
    auto t = shape("(star :points 5 :r-outer 20 :r-inner 8)", 50);
    for (const auto& p : t.points) {
        const Vec2 q = rotate(p, 2 * kPi / 5);
        double d = 1e300;
        for (const auto& o : t.points) d = std::min(d, distance(o, q));
        CHECK(d < 1e-9);
    }
}

TEST_CASE("pentagram inner vertices lie on the chords between outer tips") {
    auto e = pentagram_edges(20);
    const Vec2 tip0 = e[0].a, tip2 = e[4].a;  // outer vertices 0 and 2
    const Vec2 inner = e[1].a;                 // inner vertex between tips 0 and 1
    CHECK(std::abs(cross(tip2 - tip0, inner - tip0)) < 1e-9 * 400);
}

TEST_CASE("text KIT stays inside its glyph boxes") {
    const auto layout = layout_text("KIT", 40, 0.3);
    REQUIRE(layout.glyph_boxes.size() == 3);
    auto t = shape("(text \"KIT\" :height 40 :tracking 0.3)", 4000);
    REQUIRE(t.size() == 4000);
    // boxes computed from the font table directly
    const double scale = 40 / kGlyphHeight;
    const double advance = kGlyphWidth * scale + 0.3 * 40;
    const double width = 2 * advance + kGlyphWidth * scale;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const int g = t.labels[i] == "K" ? 0 : t.labels[i] == "I" ? 1 : 2;
        CHECK((t.labels[i] == "K" || t.labels[i] == "I" || t.labels[i] == "T"));
        const double x0 = -width / 2 + g * advance;
        const Vec2 p = t.points[i];
        CHECK(p.x >= x0 - 1e-9);
        CHECK(p.x <= x0 + kGlyphWidth * scale + 1e-9);
        CHECK(p.y >= -20 - 1e-9);
        CHECK(p.y <= 20 + 1e-9);
    }
    // every stroke of every glyph gets points
    for (char c : std::string("KIT"))
        CHECK(std::count(t.labels.begin(), t.labels.end(), std::string(1, c)) > 100);
}

TEST_CASE("font covers A-Z and 0-9 with 1 to 4 strokes in the unit box") {
    for (char c : std::string("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")) {
        CAPTURE(c);
        const auto& g = glyph(c);
        CHECK(g.strokes.size() >= 1);
        CHECK(g.strokes.size() <= 4);
        for (const auto& s : g.strokes) {
            CHECK(s.size() >= 2);
            for (const auto& p : s) CHECK((p.x >= 0 && p.x <= kGlyphWidth && p.y >= 0 && p.y <= kGlyphHeight));
        }
    }
    CHECK(has_glyph('k'));
    CHECK_THROWS_AS(shape("(text \"K#T\")", 10), std::invalid_argument);
    CHECK_THROWS_AS(shape("(blob :r 3)", 10), std::invalid_argument);
}
