#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "flow/lut_fixture.hpp"

using namespace flowscribe;
using namespace flowscribe::flow;

namespace {

// Independent transcription of the regularized Darcy point-force kernel, integrated adaptively.
Vec2 oracle_segment(Vec2 p, double L, double eps) {
    auto integrand = [&](double s, int comp) {
        const double x = p.x - s, y = p.y;
        const double r2 = x * x + y * y + eps * eps;
        const double ux = eps * eps / (M_PI * r2 * r2) - 1.0 / (2 * M_PI * r2) + x * x / (M_PI * r2 * r2);
        const double uy = x * y / (M_PI * r2 * r2);
        return comp == 0 ? ux : uy;
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    return {GK::integrate([&](double s) { return integrand(s, 0); }, -L / 2, L / 2, 15, 1e-14),
            GK::integrate([&](double s) { return integrand(s, 1); }, -L / 2, L / 2, 15, 1e-14)};
}

}  // namespace

TEST_CASE("midpoint field points along +x with unit magnitude") {
    const auto& lut = fixtures::default_lut();
    const Vec2 v = lut.velocity({0, 0});
    CHECK(v.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(v.y) < 1e-15);
    CHECK(lut.nx() == 241);
    CHECK(lut.ny() == 241);
    CHECK(lut.node_position(120, 120) == Vec2{0, 0});
}

TEST_CASE("negative sign reverses the transport direction") {
    LutParams p;
    p.sign = -1;
    p.half_extent = 15;
    const auto lut = generate_synthetic_lut(p);
    CHECK(lut.velocity({0, 0}).x == doctest::Approx(-1.0));
}

TEST_CASE("stored field is mirror-symmetric about the scan axis") {
    const auto& lut = fixtures::default_lut();
    for (std::size_t j = 0; j < lut.ny(); ++j)
        for (std::size_t i = 0; i < lut.nx(); ++i) {
            const Vec2 a = lut.node(i, j), b = lut.node(i, lut.ny() - 1 - j);
            REQUIRE(a.x == b.x);
            REQUIRE(a.y == -b.y);
        }
}

TEST_CASE("generated nodes match an adaptive quadrature oracle") {
    const auto& lut = fixtures::default_lut();
    const Vec2 mid = oracle_segment({0, 0}, 10, 1);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> pick(0, lut.nx() - 1);
    for (int k = 0; k < 200; ++k) {
        const std::size_t i = pick(rng), j = pick(rng);
        const Vec2 want = oracle_segment(lut.node_position(i, j), 10, 1) / mid.x;
        const Vec2 got = lut.node(i, j);
        REQUIRE(distance(got, want) < 1e-9);
    }
}

TEST_CASE("far field at 3L is below 20% of the midpoint magnitude") {
    const Vec2 mid = oracle_segment({0, 0}, 10, 1);
    for (Vec2 dir : {Vec2{1, 0}, Vec2{0, 1}, Vec2{M_SQRT1_2, M_SQRT1_2}, Vec2{-1, 0}}) {
        CAPTURE(dir.x);
        CAPTURE(dir.y);
        const Vec2 far = oracle_segment(dir * 30.0, 10, 1);
        CHECK(far.norm() / mid.norm() < 0.2);
        CHECK(fixtures::default_lut().velocity(dir * 29.999).norm() < 0.2);
    }
}

TEST_CASE("the literal log-kernel variant is available but not local") {
    LutParams p;
    p.generator = "stokeslet-log";
    p.half_extent = 15;
    p.spacing = 1.0;
    const auto lut = generate_synthetic_lut(p);
    CHECK(lut.velocity({0, 0}).x == doctest::Approx(1.0));
    CHECK(lut.generator() == "stokeslet-log");
}

TEST_CASE("bilinear interpolation") {
    const auto& lut = fixtures::default_lut();
    SUBCASE("exact at nodes") {
        for (std::size_t i : {0u, 17u, 120u, 239u, 240u})
            for (std::size_t j : {0u, 33u, 120u, 240u}) {
                const Vec2 got = lut.velocity(lut.node_position(i, j));
                CHECK(got == lut.node(i, j));
            }
    }
    SUBCASE("cell center averages the four corners") {
        for (std::size_t i : {3u, 58u, 100u}) {
            const std::size_t j = i + 7;
            const Vec2 avg = (lut.node(i, j) + lut.node(i + 1, j) + lut.node(i, j + 1) + lut.node(i + 1, j + 1)) / 4.0;
            const Vec2 c = (lut.node_position(i, j) + lut.node_position(i + 1, j + 1)) / 2.0;
            CHECK(distance(lut.velocity(c), avg) < 1e-15);
        }
    }
    SUBCASE("zero outside the extent") {
        for (Vec2 p : {Vec2{30.01, 0}, Vec2{0, -31}, Vec2{100, 100}, Vec2{-30.5, 29}})
            CHECK(lut.velocity(p) == Vec2{0, 0});
    }
    SUBCASE("continuous across cell edges") {
        const double x = lut.node_position(70, 0).x;
        for (double y : {-3.3, 0.1, 12.7}) {
            const Vec2 a = lut.velocity({x - 1e-10, y}), b = lut.velocity({x + 1e-10, y});
            CHECK(distance(a, b) < 1e-9);
        }
    }
    SUBCASE("jacobian matches finite differences inside a cell") {
        const Vec2 p{1.13, -2.71};
        Mat2 J;
        lut.velocity(p, &J);
        const double h = 1e-6;
        const Vec2 dx = (lut.velocity(p + Vec2{h, 0}) - lut.velocity(p - Vec2{h, 0})) / (2 * h);
        const Vec2 dy = (lut.velocity(p + Vec2{0, h}) - lut.velocity(p - Vec2{0, h})) / (2 * h);
        CHECK(J.a == doctest::Approx(dx.x).epsilon(1e-6));
        CHECK(J.c == doctest::Approx(dx.y).epsilon(1e-6));
        CHECK(J.b == doctest::Approx(dy.x).epsilon(1e-6));
        CHECK(J.d == doctest::Approx(dy.y).epsilon(1e-6));
    }
}

TEST_CASE("mid-cell error against a 4x refined table is below 2% RMS") {
    const auto& coarse = fixtures::default_lut();
    LutParams fine_p;
    fine_p.spacing = coarse.spacing() / 4;
    const auto fine = generate_synthetic_lut(fine_p);
    double err2 = 0, ref2 = 0;
    for (std::size_t j = 0; j + 1 < coarse.ny(); ++j)
        for (std::size_t i = 0; i + 1 < coarse.nx(); ++i) {
            const Vec2 c = (coarse.node_position(i, j) + coarse.node_position(i + 1, j + 1)) / 2.0;
            const Vec2 ref = fine.node(4 * i + 2, 4 * j + 2);
            REQUIRE(distance(fine.node_position(4 * i + 2, 4 * j + 2), c) < 1e-12);
            err2 += (coarse.velocity(c) - ref).norm2();
            ref2 += ref.norm2();
        }
    const double rel = std::sqrt(err2 / ref2);
    MESSAGE("mid-cell RMS error relative to RMS field " << rel);
    CHECK(rel < 0.02);
}

TEST_CASE("generator validation") {
    LutParams p;
    p.spacing = 1.5;
    CHECK_THROWS_WITH_AS(generate_synthetic_lut(p), doctest::Contains("too coarse"), std::invalid_argument);
    p = {};
    p.epsilon = 0;
    CHECK_THROWS_AS(generate_synthetic_lut(p), std::invalid_argument);
    p = {};
    p.half_extent = 10;
    CHECK_THROWS_WITH_AS(generate_synthetic_lut(p), doctest::Contains("3x"), std::invalid_argument);
    p = {};
    p.generator = "vortex";
    CHECK_THROWS_WITH_AS(generate_synthetic_lut(p), doctest::Contains("unknown LUT generator"), std::invalid_argument);
    p = {};
    p.spacing = 0.35;
    CHECK_THROWS_WITH_AS(generate_synthetic_lut(p), doctest::Contains("whole number"), std::invalid_argument);
}

TEST_CASE("binary file round trip with sidecar") {
    LutParams p;
    p.half_extent = 16;
    const auto lut = generate_synthetic_lut(p);
    const auto dir = std::filesystem::temp_directory_path() / "flowscribe_lut_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "canon.flut";
    save_lut(lut, path);
    REQUIRE(std::filesystem::exists(sidecar_path(path)));
    const auto back = load_lut(path);
    CHECK(back.extent() == lut.extent());
    CHECK(back.spacing() == lut.spacing());
    CHECK(back.scan_length() == lut.scan_length());
    CHECK(back.generator() == lut.generator());
    CHECK(back.velocities() == lut.velocities());
    CHECK(back.params() == lut.params());
    CHECK(std::filesystem::file_size(path) == 4 + 4 + 6 * 8 + 4 + lut.generator().size() + 16 * lut.velocities().size());

    SUBCASE("corrupt files are rejected") {
        {
            std::ofstream bad(dir / "bad.flut", std::ios::binary);
            bad << "NOPE";
        }
        CHECK_THROWS_WITH(load_lut(dir / "bad.flut"), doctest::Contains("not a FLUT"));
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
        CHECK_THROWS_WITH(load_lut(path), doctest::Contains("truncated"));
        CHECK_THROWS(load_lut(dir / "missing.flut"));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("uniform test table") {
    const auto lut = uniform_lut({1, 0}, 60, 2);
    CHECK(lut.velocity({13.7, -42.1}) == Vec2{1, 0});
    CHECK(lut.velocity({61, 0}) == Vec2{0, 0});
}

TEST_CASE("quiver table lists strided nodes") {
    const auto lut = uniform_lut({0.5, -0.25}, 2.0, 0.5);
    std::ostringstream out;
    write_quiver(lut, out, 2);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("# x y vx vy", 0) == 0);
    std::size_t rows = 0;
    double x, y, vx, vy;
    while (in >> x >> y >> vx >> vy) {
        ++rows;
        CHECK(vx == 0.5);
        CHECK(vy == -0.25);
        CHECK(std::abs(x) <= 2.0);
        CHECK(std::abs(y) <= 2.0);
    }
    const std::size_t per_axis = (lut.nx() + 1) / 2;
    CHECK(rows == per_axis * ((lut.ny() + 1) / 2));
    CHECK_THROWS_AS(write_quiver(lut, out, 0), std::invalid_argument);
}
