#include <cmath>

#include "doctest.h"
#include "flowscribe/dsl/parser.hpp"
#include "flowscribe/terms/curves.hpp"

using namespace flowscribe;
using namespace flowscribe::terms;

namespace {

CurveDef curve(const std::string& text) {
    auto r = dsl::read_sexpr(text);
    REQUIRE(r.value);
    return curve_from_value(*r.value);
}

// arc-length position of each sample along an independent dense polyline
std::vector<double> arc_positions(const std::vector<Vec2>& dense, const std::vector<Vec2>& samples) {
    std::vector<double> cum(dense.size(), 0.0);
    for (std::size_t i = 1; i < dense.size(); ++i) cum[i] = cum[i - 1] + distance(dense[i - 1], dense[i]);
    std::vector<double> out;
    std::size_t hint = 0;
    for (const auto& s : samples) {
        double best = 1e300;
        double pos = 0.0;
        for (std::size_t i = hint; i + 1 < dense.size(); ++i) {
            const Vec2 ab = dense[i + 1] - dense[i];
            const double t = std::clamp(dot(s - dense[i], ab) / ab.norm2(), 0.0, 1.0);
            const double d = distance(s, dense[i] + ab * t);
            if (d < best) {
                best = d;
                pos = cum[i] + t * ab.norm();
                hint = i;
            }
        }
        CHECK(best < 1e-6);
        out.push_back(pos);
    }
    return out;
}

}  // namespace

TEST_CASE("circle with 4 samples sits at quarter turns") {
    auto t = sample_curve(curve("(circle :r 20)"), 4);
    REQUIRE(t.size() == 4);
    for (int k = 0; k < 4; ++k) {
        const Vec2 a = t.points[k], b = t.points[(k + 1) % 4];
        CHECK(std::abs(a.norm() - 20) < 1e-9);
        const double ang = std::acos(std::clamp(dot(a, b) / (a.norm() * b.norm()), -1.0, 1.0));
        CHECK(std::abs(ang - kPi / 2) < 1e-9);
    }
}

TEST_CASE("segment with 3 samples") {
    auto t = sample_curve(curve("(segment :from [0 0] :to [10 0])"), 3);
    REQUIRE(t.size() == 3);
    CHECK(t.points[0] == Vec2{0, 0});
    CHECK(std::abs(t.points[1].x - 5) < 1e-12);
    CHECK(t.points[1].y == 0);
    CHECK(t.points[2] == Vec2{10, 0});
}

TEST_CASE("spiral samples are uniform in arc length against a 1e5-point polyline") {
    const double a = 2, pitch = 6, turns = 3;
    auto t = sample_curve(curve("(spiral :a 2 :pitch 6 :turns 3)"), 64);
    std::vector<Vec2> dense;
    const int K = 100000;
    for (int i = 0; i <= K; ++i) {
        const double th = 2 * kPi * turns * i / K;
        const double r = a + pitch * th / (2 * kPi);
        dense.push_back({r * std::cos(th), r * std::sin(th)});
    }
    auto pos = arc_positions(dense, t.points);
    const double mean = (pos.back() - pos.front()) / 63.0;
    for (std::size_t i = 1; i < pos.size(); ++i) CHECK(std::abs(pos[i] - pos[i - 1] - mean) < 0.005 * mean);
}

TEST_CASE("every curve kind samples uniformly, closed curves without a duplicate endpoint") {
    const char* forms[] = {"(circle :r 7 :center [3 4])",
                           "(ellipse :a 25 :b 8 :angle 30)",
                           "(sinusoid :amplitude 8 :period 25 :length 70)",
                           "(heart :size 18)",
                           "(polygon :sides 6 :r 18)",
                           "(star :points 5 :r-outer 20 :r-inner 8)",
                           "(chain :points [[0 0] [10 0] [10 5]] :closed true)",
                           "(chain :points [[0 0] [10 0] [10 5]])"};
    for (std::string f : forms) {
        CAPTURE(f);
        const CurveDef c = curve(f);
        const std::size_t m = 48;
        auto t = sample_curve(c, m);
        REQUIRE(t.size() == m);
        auto dense = dense_polyline(c, 200000);
        auto pos = arc_positions(dense, t.points);
        double total = 0;
        for (std::size_t i = 1; i < dense.size(); ++i) total += distance(dense[i - 1], dense[i]);
        CHECK(std::abs(total - curve_length(c)) < 1e-6 * total);
        const double gap = total / static_cast<double>(c.is_closed() ? m : m - 1);
        for (std::size_t i = 1; i < pos.size(); ++i) CHECK(std::abs(pos[i] - pos[i - 1] - gap) < 0.005 * gap);
        if (c.is_closed()) CHECK(std::abs(total - pos.back() - gap) < 0.005 * gap);
        else CHECK(distance(t.points.back(), dense.back()) < 1e-12);
    }
}

TEST_CASE("sampling errors") {
    CHECK_THROWS_AS(sample_curve(curve("(segment :from [1 1] :to [1 1])"), 4), std::invalid_argument);
    CHECK_THROWS_AS(sample_curve(curve("(circle :r 3)"), 1), std::invalid_argument);
}

TEST_CASE("pose keys rotate (degrees) then translate") {
    auto t = sample_curve(curve("(polygon :sides 4 :r 1 :angle 90 :center [5 0])"), 4);
    CHECK(std::abs(t.points[0].x - 5) < 1e-12);
    CHECK(std::abs(t.points[0].y - 1) < 1e-12);
}
