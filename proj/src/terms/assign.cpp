#include "flowscribe/terms/assign.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "flowscribe/terms/spatial.hpp"

namespace flowscribe::terms {

// Shortest augmenting path with potentials (Jonker-Volgenant style), O(n^2 m).
std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t n, std::size_t m) {
    if (n > m) throw std::invalid_argument("hungarian: more rows than columns");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

namespace {

double total(const std::vector<Vec2>& x, const std::vector<Vec2>& t, const std::vector<std::size_t>& a) {
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - t[a[i]]).norm2();
    return c;
}

std::vector<std::size_t> greedy_two_swap(const std::vector<Vec2>& x, const std::vector<Vec2>& t) {
    const std::size_t n = x.size(), m = t.size();
    struct Pair {
        double d2;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) pairs.push_back({(x[i] - t[j]).norm2(), i, j});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.d2 != b.d2) return a.d2 < b.d2;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> a(n, none);
    std::vector<char> taken(m, 0);
    std::size_t left = n;
    for (const auto& p : pairs) {
        if (left == 0) break;
        if (a[p.i] != none || taken[p.j]) continue;
        a[p.i] = p.j;
        taken[p.j] = 1;
        --left;
    }
    // 2-swap and move-to-free-target refinement
    for (int pass = 0; pass < 50; ++pass) {
        bool improved = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = i + 1; k < n; ++k) {
                const double before = (x[i] - t[a[i]]).norm2() + (x[k] - t[a[k]]).norm2();
                const double after = (x[i] - t[a[k]]).norm2() + (x[k] - t[a[i]]).norm2();
                if (after < before - 1e-12 * (1.0 + before)) {
                    std::swap(a[i], a[k]);
                    improved = true;
                }
            }
            if (m > n) {
                for (std::size_t j = 0; j < m; ++j) {
                    if (taken[j]) continue;
                    if ((x[i] - t[j]).norm2() < (x[i] - t[a[i]]).norm2() - 1e-12) {
                        taken[a[i]] = 0;
                        a[i] = j;
                        taken[j] = 1;
                        improved = true;
                    }
                }
            }
        }
        if (!improved) break;
    }
    return a;
}

}  // namespace

Assignment assign(const std::vector<Vec2>& x, const std::vector<Vec2>& t, AssignMode mode) {
    if (t.empty()) throw std::invalid_argument("assign: empty target set");
    Assignment out;
    if (mode == AssignMode::nearest) {
        PointGrid grid(t);
        out.target.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out.target[i] = grid.nearest(x[i]).index;
    } else {
        if (x.size() > t.size()) throw std::invalid_argument("balanced assignment needs n <= number of targets");
        if (x.size() <= kExactAssignLimit) {
            std::vector<double> c(x.size() * t.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                for (std::size_t j = 0; j < t.size(); ++j) c[i * t.size() + j] = (x[i] - t[j]).norm2();
            out.target = hungarian(c, x.size(), t.size());
        } else {
            out.target = greedy_two_swap(x, t);
            out.exact = false;
        }
    }
    out.cost = total(x, t, out.target);
    return out;
}

}  // namespace flowscribe::terms
