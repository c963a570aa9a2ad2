#include <cmath>
#include <random>

#include <boost/math/distributions/binomial.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "doctest.h"
#include "flowscribe/control/metrics.hpp"

using namespace flowscribe;
using namespace flowscribe::control;
using boost::multiprecision::cpp_rational;

namespace {

// n points evenly spaced along the perimeter from a random phase; n divisible by 4 keeps the
// centroid on the center.
std::vector<Vec2> on_square(const SquarePose& s, std::size_t n, double phase) {
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = std::fmod(phase + 8.0 * static_cast<double>(i) / static_cast<double>(n), 8.0);
        const int side = static_cast<int>(t / 2) % 4;
        const double r = std::fmod(t, 2.0) - 1.0;
        const Vec2 q = side == 0 ? Vec2{1, r} : side == 1 ? Vec2{-r, 1} : side == 2 ? Vec2{-1, -r} : Vec2{r, -1};
        out.push_back(s.center + rotate(q * s.half_side, s.angle));
    }
    return out;
}

std::vector<Vec2> transform(const std::vector<Vec2>& pts, Vec2 shift, double angle, double scale) {
    std::vector<Vec2> out;
    for (const auto& p : pts) out.push_back(rotate(p * scale, angle) + shift);
    return out;
}

ParticleConfig cfg(std::vector<Vec2> p) {
    ParticleConfig a;
    a.positions = std::move(p);
    return a;
}

cpp_rational exact_tail(long n, long k, const cpp_rational& alpha) {
    cpp_rational sum = 0, binom = 1;  // C(n, 0)
    for (long j = 0; j <= n; ++j) {
        if (j > 0) binom = binom * (n - j + 1) / j;
        if (j >= k) {
            cpp_rational term = binom;
            for (long i = 0; i < j; ++i) term *= alpha;
            for (long i = 0; i < n - j; ++i) term *= (1 - alpha);
            sum += term;
        }
    }
    return sum;
}

}  // namespace

TEST_CASE("perimeter distance") {
    const SquarePose s{{1, 1}, 0.0, 2.0};
    CHECK(square_perimeter_distance({1, 1}, s) == doctest::Approx(2));
    CHECK(square_perimeter_distance({3, 1}, s) == doctest::Approx(0));
    CHECK(square_perimeter_distance({2, 1}, s) == doctest::Approx(1));
    CHECK(square_perimeter_distance({4, 4}, s) == doctest::Approx(std::sqrt(2.0)));
    CHECK(square_perimeter_distance({1, 6}, s) == doctest::Approx(3));
    const SquarePose r{{0, 0}, kPi / 4, 1.0};
    CHECK(square_perimeter_distance({0, std::sqrt(2.0)}, r) < 1e-12);
}

TEST_CASE("points on a square perimeter score zero in any pose") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const SquarePose s{{20 * u(rng), 20 * u(rng)}, kPi * u(rng), 2 + 8 * std::abs(u(rng))};
        const auto pts = on_square(s, 4 * static_cast<std::size_t>(2 + trial % 6), 2 + 2 * u(rng));
        CAPTURE(trial);
        CHECK(squareness_index(cfg(pts)) < 1e-6);
    }
}

TEST_CASE("squareness is invariant under translation, rotation and scale") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0, 1);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Vec2> pts;
        const std::size_t n = 4 + static_cast<std::size_t>(trial % 12);
        for (std::size_t i = 0; i < n; ++i) pts.push_back({5 * g(rng), 5 * g(rng)});
        const double base = squareness_index(cfg(pts));
        const auto moved = transform(pts, {g(rng) * 10, g(rng) * 10}, g(rng), 0.5 + std::abs(g(rng)));
        CAPTURE(trial);
        CHECK(std::abs(squareness_index(cfg(moved)) - base) < 1e-6);
    }
}

TEST_CASE("twelve points on a circle against a dense pose grid") {
    std::vector<Vec2> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({std::cos(2 * kPi * i / 12), std::sin(2 * kPi * i / 12)});
    // 1000 angles x 1000 half-sides around the centroid
    double oracle = 1e300;
    for (int ia = 0; ia < 1000; ++ia)
        for (int is = 0; is < 1000; ++is) {
            const SquarePose s{{0, 0}, (kPi / 2) * ia / 1000, 0.6 + 0.0006 * is};
            oracle = std::min(oracle, square_fit_cost(pts, s));
        }
    const auto fit = fit_square(pts);
    CHECK(fit.index <= oracle + 1e-12);
    CHECK(fit.index == doctest::Approx(oracle).epsilon(1e-4));
    CHECK(fit.index == doctest::Approx(square_fit_cost(pts, fit.pose)).epsilon(1e-12));
    CHECK(fit.pose.half_side > 0.6);
    CHECK(fit.pose.half_side < 1.2);
}

TEST_CASE("configurations that are not squares score well above zero") {
    CHECK(squareness_index(cfg({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}})) > 0.1);
    CHECK(squareness_index(cfg({{0, 0}, {1, 0}, {2, 0}, {0, 1}, {0, 2}})) > 0.1);  // L shape
    std::vector<Vec2> ring;
    for (int i = 0; i < 24; ++i) ring.push_back({std::cos(2 * kPi * i / 24), std::sin(2 * kPi * i / 24)});
    CHECK(squareness_index(cfg(ring)) > 0.05);
    CHECK(squareness_index(cfg(on_square({{0, 0}, 0.3, 2.0}, 24, 0.1))) < 1e-8);
}

TEST_CASE("four points fit the corners") {
    CHECK(squareness_index(cfg({{0, 0}, {3, 0}, {3, 3}, {0, 3}})) < 1e-12);
    CHECK(squareness_index(cfg({{3, 3}, {0, 0}, {0, 3}, {3, 0}})) < 1e-12);  // order does not matter
    // 2:1 rectangle: least-squares half-side 1.5, corner residual 1/sqrt(2)
    CHECK(squareness_index(cfg({{-2, -1}, {2, -1}, {2, 1}, {-2, 1}})) == doctest::Approx(std::sqrt(2.0) / 3));
    const auto fit = fit_square({{-2, -1}, {2, -1}, {2, 1}, {-2, 1}});
    CHECK(fit.pose.half_side == doctest::Approx(1.5));
    CHECK(fit.pose.angle >= 0);
    CHECK(fit.pose.angle < kPi / 2);
    CHECK(squareness_index(cfg({{0, 0}, {1, 0}, {2, 0}, {3, 0}})) > 0.3);
}

TEST_CASE("squareness rejects degenerate input") {
    CHECK_THROWS_AS(squareness_index(cfg({{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}})), std::invalid_argument);
    CHECK_THROWS_AS(squareness_index(cfg({{1, 1}, {1, 1}, {1, 1}, {1, 1}})), std::invalid_argument);
    CHECK_THROWS_AS(squareness_index(cfg({{0, 0}, {1, 0}, {0, 1}})), std::invalid_argument);
}

TEST_CASE("density ratio") {
    ParticleConfig a;
    a.fov = Rect::centered(50, 50);
    for (int i = 0; i < 100; ++i) a.positions.push_back({i < 15 ? 0.01 * i : 40.0, 0});
    const auto disk = terms::Region::disk({0, 0}, std::sqrt(100 / kPi));
    CHECK(density_ratio(a, disk) == doctest::Approx(15));
    const auto whole = terms::Region::rect({0, 0}, {100, 100});
    CHECK(density_ratio(a, whole) == doctest::Approx(1));
    const auto empty = terms::Region::disk({-30, -30}, 2);
    CHECK(density_ratio(a, empty) == 0.0);
    CHECK_THROWS_AS(density_ratio(a, terms::Region::rect({0, 0}, {0, 5})), std::invalid_argument);
}

TEST_CASE("spontaneous probability closed forms") {
    CHECK(spontaneous_probability(100, 0, 0.01) == 1.0);
    CHECK(spontaneous_probability(10, 10, 0.5) == doctest::Approx(9.765625e-4).epsilon(1e-12));
    CHECK(spontaneous_probability(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(spontaneous_probability(10, 11, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(spontaneous_probability(10, 1, 1.0), std::invalid_argument);
}

TEST_CASE("spontaneous probability against exact rational sums") {
    const cpp_rational exact = exact_tail(100, 15, cpp_rational(1, 100));
    const double p = spontaneous_probability(100, 15, 0.01);
    CHECK(p < 1e-10);
    CHECK(std::abs(p / static_cast<double>(exact) - 1) < 1e-9);

    double worst = 0.0;
    for (long n : {1L, 5L, 17L, 40L, 60L})
        for (auto [num, den] : {std::pair{1, 100}, {1, 10}, {1, 3}, {1, 2}, {7, 8}})
            for (long k = 0; k <= n; ++k) {
                const double alpha = static_cast<double>(num) / den;
                // alpha's rounding moves the tail by ~n ulp, far below the tolerance
                const double ex = static_cast<double>(exact_tail(n, k, cpp_rational(num, den)));
                if (ex == 0) continue;
                worst = std::max(worst, std::abs(spontaneous_probability(n, k, alpha) / ex - 1));
            }
    CHECK(worst < 1e-9);

    // independent cross-check through the regularized incomplete beta
    using boost::math::binomial_distribution;
    const double bm = boost::math::cdf(boost::math::complement(binomial_distribution<double>(100, 0.01), 14.0));
    CHECK(p == doctest::Approx(bm).epsilon(1e-9));
}

TEST_CASE("log probability survives underflow") {
    const double lp = log_spontaneous_probability(2000, 1500, 0.01);
    CHECK(std::isfinite(lp));
    CHECK(lp < -5000);
    CHECK(spontaneous_probability(2000, 1500, 0.01) == 0.0);
}
