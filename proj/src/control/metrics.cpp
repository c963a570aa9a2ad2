#include "flowscribe/control/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace flowscribe::control {

double square_perimeter_distance(Vec2 p, const SquarePose& s) {
    const Vec2 q = rotate(p - s.center, -s.angle);
    const double ax = std::abs(q.x), ay = std::abs(q.y);
    if (ax <= s.half_side && ay <= s.half_side) return s.half_side - std::max(ax, ay);
    return std::hypot(std::max(ax - s.half_side, 0.0), std::max(ay - s.half_side, 0.0));
}

double square_fit_cost(const std::vector<Vec2>& pts, const SquarePose& s) {
    double sum = 0.0;
    for (const auto& p : pts) {
        const double d = square_perimeter_distance(p, s);
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pts.size())) / s.half_side;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double wrap_quarter(double a) {
    a = std::fmod(a, kPi / 2);
    return a < 0 ? a + kPi / 2 : a;
}

using Point = std::array<double, 2>;  // angle, log half-side

// Plain Nelder-Mead with standard coefficients; deterministic.
template <class F>
std::pair<Point, double> nelder_mead(const F& f, Point start, const Point& step) {
    std::array<Point, 3> x{start, start, start};
    x[1][0] += step[0];
    x[2][1] += step[1];
    std::array<double, 3> fx{f(x[0]), f(x[1]), f(x[2])};
    std::array<int, 3> idx{0, 1, 2};
    for (int iter = 0; iter < 2000; ++iter) {
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        const int best = idx[0], worst = idx[2], second = idx[1];
        double size = 0.0;
        for (int i = 1; i < 3; ++i)
            for (int d = 0; d < 2; ++d) size = std::max(size, std::abs(x[idx[i]][d] - x[best][d]));
        if (fx[worst] - fx[best] <= 1e-15 * (1 + fx[best]) && size <= 1e-11) break;

        Point c{(x[best][0] + x[second][0]) / 2, (x[best][1] + x[second][1]) / 2};
        auto along = [&](double t) { return Point{c[0] + t * (x[worst][0] - c[0]), c[1] + t * (x[worst][1] - c[1])}; };
        const Point r = along(-1.0);
        const double fr = f(r);
        if (fr < fx[best]) {
            const Point e = along(-2.0);
            const double fe = f(e);
            if (fe < fr) x[worst] = e, fx[worst] = fe;
            else x[worst] = r, fx[worst] = fr;
        } else if (fr < fx[second]) {
            x[worst] = r, fx[worst] = fr;
        } else {
            const Point k = fr < fx[worst] ? along(-0.5) : along(0.5);
            const double fk = f(k);
            if (fk < std::min(fr, fx[worst])) {
                x[worst] = k, fx[worst] = fk;
            } else {
                for (int i = 1; i < 3; ++i) {
                    for (int d = 0; d < 2; ++d) x[idx[i]][d] = x[best][d] + 0.5 * (x[idx[i]][d] - x[best][d]);
                    fx[idx[i]] = f(x[idx[i]]);
                }
            }
        }
    }
    const int b = static_cast<int>(std::min_element(fx.begin(), fx.end()) - fx.begin());
    return {x[b], fx[b]};
}

// Four points always sit on some square's perimeter, so they are matched to its corners instead:
// least-squares similarity fit z ~ c + w u over every corner assignment.
SquareFit fit_corners(const std::vector<Vec2>& pts) {
    using C = std::complex<double>;
    const std::array<C, 4> u{C(1, 1), C(-1, 1), C(-1, -1), C(1, -1)};
    std::array<C, 4> z;
    for (int i = 0; i < 4; ++i) z[i] = {pts[i].x, pts[i].y};
    const C c = (z[0] + z[1] + z[2] + z[3]) / 4.0;
    std::array<int, 4> perm{0, 1, 2, 3};
    SquareFit best{{}, kInf};
    do {
        C w = 0;
        for (int i = 0; i < 4; ++i) w += std::conj(u[perm[i]]) * (z[i] - c);
        w /= 8.0;
        if (std::abs(w) == 0) continue;
        double r2 = 0.0;
        for (int i = 0; i < 4; ++i) r2 += std::norm(z[i] - c - w * u[perm[i]]);
        const double index = std::sqrt(r2 / 4) / std::abs(w);
        if (index < best.index) best = {{{c.real(), c.imag()}, wrap_quarter(std::arg(w)), std::abs(w)}, index};
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

SquareFit fit_square(const std::vector<Vec2>& pts) {
    if (pts.size() < 4) throw std::invalid_argument("squareness needs at least 4 particles");
    if (!all_finite(pts)) throw std::invalid_argument("non-finite particle position");
    const Vec2 c = centroid(pts);
    double spread = 0.0;
    for (const auto& p : pts) spread += (p - c).norm2();
    spread = std::sqrt(spread / static_cast<double>(pts.size()));
    if (!(spread > 1e-12 * (1 + c.norm()))) throw std::invalid_argument("degenerate configuration: all points coincide");
    if (pts.size() == 4) return fit_corners(pts);

    // The square is centered on the centroid: with a free center the ratio tends to zero for any
    // configuration as the square grows and one corner hugs the points.
    auto f = [&](const Point& v) { return square_fit_cost(pts, {c, v[0], std::exp(v[1])}); };
    double rmax = 0.0;
    for (const auto& p : pts) rmax = std::max(rmax, distance(p, c));
    std::vector<std::pair<double, Point>> cands;
    for (int i = 0; i < 36; ++i)
        for (int k = 0; k <= 24; ++k) {
            const Point v{(kPi / 2) * i / 36.0, std::log(rmax * (0.3 + 0.75 * k / 24.0))};
            cands.push_back({f(v), v});
        }
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    const Point step{kPi / 72, 0.03};
    SquareFit best{{}, kInf};
    for (std::size_t s = 0; s < 4; ++s) {
        auto [v, fv] = nelder_mead(f, cands[s].second, step);
        std::tie(v, fv) = nelder_mead(f, v, step);  // restart guards against simplex collapse
        if (fv < best.index) best = {{c, v[0], std::exp(v[1])}, fv};
    }
    best.pose.angle = wrap_quarter(best.pose.angle);
    return best;
}

double squareness_index(const ParticleConfig& a) { return fit_square(a.positions).index; }

double density_ratio(const ParticleConfig& a, const terms::Region& region) {
    const double area = region.area();
    if (!(area > 0)) throw std::invalid_argument("density region has zero area");
    if (!a.fov.valid()) throw std::invalid_argument("field of view has zero area");
    if (a.positions.empty()) throw std::invalid_argument("density of an empty configuration");
    std::size_t k = 0;
    for (const auto& p : a.positions) k += region.contains(p) ? 1 : 0;
    const double alpha = area / a.fov.area();
    return (static_cast<double>(k) / static_cast<double>(a.size())) / alpha;
}

double log_spontaneous_probability(long n, long k, double alpha) {
    if (n < 0 || k < 0 || k > n) throw std::invalid_argument("need 0 <= k <= n");
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("area fraction must lie in (0, 1)");
    if (k == 0) return 0.0;
    const double la = std::log(alpha), lb = std::log1p(-alpha);
    const double lgn = std::lgamma(static_cast<double>(n) + 1);
    std::vector<double> terms;
    for (long j = k; j <= n; ++j) {
        const double jj = static_cast<double>(j);
        terms.push_back(lgn - std::lgamma(jj + 1) - std::lgamma(static_cast<double>(n - j) + 1) + jj * la +
                        static_cast<double>(n - j) * lb);
    }
    const double m = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return std::min(0.0, m + std::log(s));
}

double spontaneous_probability(long n, long k, double alpha) { return std::exp(log_spontaneous_probability(n, k, alpha)); }

}  // namespace flowscribe::control
