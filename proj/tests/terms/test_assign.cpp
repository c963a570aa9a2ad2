#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "flowscribe/terms/assign.hpp"

using namespace flowscribe;
using namespace flowscribe::terms;

namespace {

// minimum over all injections of particles into targets
double brute_force(const std::vector<Vec2>& x, const std::vector<Vec2>& t) {
    std::vector<std::size_t> cols(t.size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    double best = 1e300;
    do {
        double c = 0;
        for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - t[cols[i]]).norm2();
        best = std::min(best, c);
    } while (std::next_permutation(cols.begin(), cols.end()));
    return best;
}

std::vector<Vec2> random_points(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-20, 20);
    std::vector<Vec2> p(n);
    for (auto& q : p) q = {u(rng), u(rng)};
    return p;
}

}  // namespace

TEST_CASE("particles on distinct targets cost nothing in both modes") {
    std::vector<Vec2> t = {{0, 0}, {3, 1}, {-2, 5}};
    std::vector<Vec2> x = {t[2], t[0], t[1]};
    for (auto mode : {AssignMode::nearest, AssignMode::balanced}) {
        auto a = assign(x, t, mode);
        CHECK(a.cost == 0);
        CHECK(a.target == std::vector<std::size_t>{2, 0, 1});
    }
}

TEST_CASE("two particles, two crossed targets") {
    std::vector<Vec2> x = {{0, 0}, {10, 0}};
    std::vector<Vec2> t = {{9, 0}, {1, 0}};
    auto b = assign(x, t, AssignMode::balanced);
    CHECK(b.target == std::vector<std::size_t>{1, 0});
    CHECK(b.cost == doctest::Approx(2));
    auto n = assign(x, t, AssignMode::nearest);
    CHECK(n.target == std::vector<std::size_t>{1, 0});
}

TEST_CASE("nearest ties resolve to the lowest target index") {
    std::vector<Vec2> t = {{1, 0}, {-1, 0}, {0, 1}};
    auto a = assign({{0, 0}}, t, AssignMode::nearest);
    CHECK(a.target[0] == 0);
    auto b = assign({{0, 0.5}}, {{1, 0.5}, {-1, 0.5}}, AssignMode::nearest);
    CHECK(b.target[0] == 0);
}

TEST_CASE("balanced equals brute force on random 8x8 and rectangular instances") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        auto x = random_points(rng, 8);
        auto t = random_points(rng, 8);
        auto a = assign(x, t, AssignMode::balanced);
        CHECK(a.exact);
        CHECK(a.cost == doctest::Approx(brute_force(x, t)).epsilon(1e-12));
        auto sorted = a.target;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto x = random_points(rng, 4);
        auto t = random_points(rng, 7);
        CHECK(assign(x, t, AssignMode::balanced).cost == doctest::Approx(brute_force(x, t)).epsilon(1e-12));
    }
}

TEST_CASE("balanced rejects more particles than targets") {
    CHECK_THROWS_AS(assign({{0, 0}, {1, 1}}, {{0, 0}}, AssignMode::balanced), std::invalid_argument);
}

TEST_CASE("large instances use the flagged heuristic, injective and close to exact") {
    std::mt19937_64 rng(5);
    auto x = random_points(rng, 100);
    auto t = random_points(rng, 100);
    auto a = assign(x, t, AssignMode::balanced);
    CHECK_FALSE(a.exact);
    auto sorted = a.target;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    std::vector<double> c(100 * 100);
    for (std::size_t i = 0; i < 100; ++i)
        for (std::size_t j = 0; j < 100; ++j) c[i * 100 + j] = (x[i] - t[j]).norm2();
    auto exact = hungarian(c, 100, 100);
    double best = 0;
    for (std::size_t i = 0; i < 100; ++i) best += c[i * 100 + exact[i]];
    CHECK(a.cost >= best - 1e-9);
    CHECK(a.cost <= 1.25 * best);
}
