#include "flowscribe/potential/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>

namespace flowscribe::potential {

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::gradient: return "gradient";
        case StopReason::stalled: return "stalled";
        case StopReason::line_search: return "line_search";
        case StopReason::max_iters: return "max_iters";
    }
    return "unknown";
}

ParticleConfig random_config(std::size_t n, const Rect& fov, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(fov.x0, fov.x1), uy(fov.y0, fov.y1);
    ParticleConfig a;
    a.fov = fov;
    a.positions.resize(n);
    for (auto& p : a.positions) {
        p.x = ux(rng);
        p.y = uy(rng);
    }
    return a;
}

namespace {

using Vec = std::vector<double>;

double dotv(const Vec& a, const Vec& b) { return std::inner_product(a.begin(), a.end(), b.begin(), 0.0); }

Vec flatten(const std::vector<Vec2>& p) {
    Vec v(2 * p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        v[2 * i] = p[i].x;
        v[2 * i + 1] = p[i].y;
    }
    return v;
}

std::vector<Vec2> unflatten(const Vec& v) {
    std::vector<Vec2> p(v.size() / 2);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = {v[2 * i], v[2 * i + 1]};
    return p;
}

double inf_norm(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct Pair {
    Vec s, y;
    double rho;
};

Vec two_loop(const Vec& g, const std::deque<Pair>& mem) {
    Vec q = g;
    std::vector<double> alpha(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
        alpha[k] = mem[k].rho * dotv(mem[k].s, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * mem[k].y[i];
    }
    if (!mem.empty()) {
        const auto& last = mem.back();
        const double gamma = dotv(last.s, last.y) / dotv(last.y, last.y);
        for (auto& v : q) v *= gamma;
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
        const double beta = mem[k].rho * dotv(mem[k].y, q);
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += (alpha[k] - beta) * mem[k].s[i];
    }
    for (auto& v : q) v = -v;
    return q;
}

SolveTrace run(const terms::CompiledObjective& obj, const ParticleConfig& start, const SolveOptions& o) {
    const double L = obj.norm_length();
    SolveTrace tr;
    tr.initial = start;
    Vec x = flatten(start.positions);
    std::vector<Vec2> gp;
    auto fg = [&](const Vec& xv, Vec& g) {
        ++tr.evaluations;
        const double f = obj.value_and_gradient(unflatten(xv), gp);
        g = flatten(gp);
        return f;
    };
    Vec g;
    double f = fg(x, g);
    if (!std::isfinite(f)) throw std::runtime_error("objective is not finite at the initial configuration");
    tr.objective.push_back(f);
    std::deque<Pair> mem;
    auto record = [&](const Vec& xv) {
        ParticleConfig fr;
        fr.fov = start.fov;
        fr.positions = unflatten(xv);
        tr.frames.push_back(std::move(fr));
    };
    if (o.record_every > 0) record(x);

    tr.reason = StopReason::max_iters;
    while (true) {
        tr.grad_norm = inf_norm(g) * L;
        if (tr.grad_norm <= o.tolerance) {
            tr.reason = StopReason::gradient;
            break;
        }
        if (tr.iterations >= o.max_iters) break;
        const std::size_t w = static_cast<std::size_t>(o.stall_window);
        if (tr.objective.size() > w) {
            const double old = tr.objective[tr.objective.size() - 1 - w];
            if (old - f <= o.rel_ftol * (1.0 + std::abs(f))) {
                tr.reason = StopReason::stalled;
                break;
            }
        }

        Vec d = two_loop(g, mem);
        double slope = dotv(g, d);
        if (!(slope < 0)) {
            mem.clear();
            d = g;
            for (auto& v : d) v = -v;
            slope = dotv(g, d);
        }
        // first step from steepest descent moves the farthest particle by at most L / 10
        double step = 1.0;
        if (mem.empty()) step = std::min(1.0, 0.1 * L / std::max(inf_norm(d), 1e-300));

        Vec xn(x.size()), gn;
        double fn = f;
        bool accepted = false;
        for (int bt = 0; bt < o.max_backtracks; ++bt) {
            for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + step * d[i];
            fn = fg(xn, gn);
            if (std::isfinite(fn) && fn <= f + o.armijo_c * step * slope && fn < f) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!mem.empty()) {
                mem.clear();  // retry once along steepest descent
                continue;
            }
            tr.reason = StopReason::line_search;
            break;
        }
        Pair p{Vec(x.size()), Vec(x.size()), 0.0};
        for (std::size_t i = 0; i < x.size(); ++i) {
            p.s[i] = xn[i] - x[i];
            p.y[i] = gn[i] - g[i];
        }
        const double sy = dotv(p.s, p.y);
        if (sy > 1e-12 * std::sqrt(dotv(p.s, p.s) * dotv(p.y, p.y))) {
            p.rho = 1.0 / sy;
            mem.push_back(std::move(p));
            if (static_cast<int>(mem.size()) > o.memory) mem.pop_front();
        }
        x = std::move(xn);
        g = std::move(gn);
        f = fn;
        ++tr.iterations;
        tr.objective.push_back(f);
        if (o.record_every > 0 && tr.iterations % o.record_every == 0) record(x);
    }
    tr.converged = tr.reason == StopReason::gradient || tr.reason == StopReason::stalled ||
                   tr.reason == StopReason::line_search;
    tr.final.fov = start.fov;
    tr.final.positions = unflatten(x);
    return tr;
}

}  // namespace

SolveTrace descend(const terms::CompiledObjective& obj, const ParticleConfig& start, const SolveOptions& o) {
    if (o.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    if (!(o.tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
    if (start.size() != obj.n()) throw std::invalid_argument("configuration size does not match the objective");
    if (obj.uses_labels()) return run(obj, start, o);

    // canonical order: lexicographic by position, then original index
    std::vector<std::size_t> perm(start.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const auto& p = start.positions;
    std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        if (p[a].x != p[b].x) return p[a].x < p[b].x;
        return p[a].y < p[b].y;
    });
    ParticleConfig canon;
    canon.fov = start.fov;
    for (auto i : perm) canon.positions.push_back(p[i]);
    SolveTrace tr = run(obj, canon, o);
    auto relabel = [&](ParticleConfig& c) {
        std::vector<Vec2> out(c.size());
        for (std::size_t k = 0; k < perm.size(); ++k) out[perm[k]] = c.positions[k];
        c.positions = std::move(out);
    };
    tr.initial = start;
    relabel(tr.final);
    for (auto& fr : tr.frames) relabel(fr);
    return tr;
}

SolveTrace solve_potential(const terms::CompiledObjective& obj, std::size_t n, const Rect& fov,
                           const SolveOptions& o) {
    if (n != obj.n()) throw std::invalid_argument("n does not match the objective");
    if (!fov.valid()) throw std::invalid_argument("field of view must have positive size");
    std::mt19937_64 seeds(o.seed);
    std::optional<SolveTrace> best;
    for (int r = 0; r < std::max(1, o.restarts); ++r) {
        const std::uint64_t restart_seed = seeds();
        ParticleConfig init;
        bool ok = false;
        for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
            init = random_config(n, fov, restart_seed + static_cast<std::uint64_t>(attempt));
            ok = std::isfinite(obj.evaluate(init));
        }
        if (!ok) throw std::runtime_error("objective is not finite at 10 sampled initial configurations");
        SolveTrace tr = descend(obj, init, o);
        tr.restart = r;
        if (!best || tr.objective.back() < best->objective.back()) best = std::move(tr);
    }
    return std::move(*best);
}

}  // namespace flowscribe::potential
