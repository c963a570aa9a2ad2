#include "flowscribe/inverse/sqp.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "flowscribe/inverse/qp.hpp"

namespace flowscribe::inverse {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(SqpStatus s) {
    switch (s) {
        case SqpStatus::kkt: return "kkt";
        case SqpStatus::small_step: return "small_step";
        case SqpStatus::line_search: return "line_search";
        case SqpStatus::max_iters: return "max_iters";
    }
    return "unknown";
}

InfeasibleError::InfeasibleError(double best_violation, int starts)
    : std::runtime_error("constraints appear infeasible: best violation " + std::to_string(best_violation) +
                         " after " + std::to_string(starts) + " feasibility starts"),
      best_violation_(best_violation),
      starts_(starts) {}

Problem make_problem(Index n, std::function<double(const VectorXd&, VectorXd*)> f, VectorXd lower, VectorXd upper,
                     Index m, std::function<void(const VectorXd&, VectorXd&, MatrixXd*)> c) {
    Problem p;
    p.n = n;
    p.m = m;
    p.lower = std::move(lower);
    p.upper = std::move(upper);
    p.evaluate = [f = std::move(f), c = std::move(c), n, m](const VectorXd& x, bool deriv, Evaluation& e) {
        e.grad.resize(n);
        e.f = f(x, deriv ? &e.grad : nullptr);
        e.c.resize(m);
        if (m > 0) {
            e.jac.resize(m, n);
            c(x, e.c, deriv ? &e.jac : nullptr);
        } else {
            e.jac.resize(0, n);
        }
    };
    return p;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double violation(const VectorXd& c) { return c.size() ? std::max(0.0, -c.minCoeff()) : 0.0; }
double violation_l1(const VectorXd& c) { return (-c).cwiseMax(0.0).sum(); }

bool finite(const VectorXd& v) { return v.allFinite(); }

struct Counters {
    int evaluations = 0;
    int derivative_evaluations = 0;
};

class Runner {
public:
    Runner(const Problem& p, const SqpOptions& o, Counters& k) : p_(p), o_(o), k_(k) {
        if (p.lower.size() != p.n || p.upper.size() != p.n) throw std::invalid_argument("bounds size mismatch");
        for (Index i = 0; i < p.n; ++i)
            if (p.lower(i) > p.upper(i)) throw std::invalid_argument("lower bound exceeds upper bound");
    }

    VectorXd clamp(const VectorXd& x) const { return x.cwiseMax(p_.lower).cwiseMin(p_.upper); }

    Evaluation eval(const VectorXd& x, bool deriv) const {
        Evaluation e;
        p_.evaluate(x, deriv, e);
        ++k_.evaluations;
        if (deriv) ++k_.derivative_evaluations;
        return e;
    }

    SqpResult run(VectorXd x) const {
        x = clamp(x);
        Evaluation E = eval(x, true);
        if (!std::isfinite(E.f) || !finite(E.grad) || !finite(E.c) || !finite(E.jac.reshaped()))
            throw std::runtime_error("objective or constraints not finite at the start point");

        const Index n = p_.n;
        const double gmax = E.grad.lpNorm<Eigen::Infinity>();
        MatrixXd B = MatrixXd::Identity(n, n) * (gmax > 0 ? gmax / o_.initial_step : 1.0);
        bool first_update = true, reset_used = false;
        if (o_.initial_hessian.rows() == n && o_.initial_hessian.cols() == n &&
            Eigen::LLT<MatrixXd>(o_.initial_hessian).info() == Eigen::Success) {
            B = o_.initial_hessian;
            first_update = false;
        }
        double mu = 0.0;

        SqpResult r;
        std::optional<std::pair<VectorXd, Evaluation>> best_feasible;
        auto note_feasible = [&](const VectorXd& xx, const Evaluation& ee) {
            if (violation(ee.c) <= o_.tolerance && (!best_feasible || ee.f < best_feasible->second.f))
                best_feasible.emplace(xx, ee);
        };
        note_feasible(x, E);

        r.status = SqpStatus::max_iters;
        VectorXd lam;
        bool stale = false;
        for (r.iterations = 0; r.iterations < o_.max_iters; ++r.iterations) {
            if (kkt_residual(p_, x, E, &lam) <= o_.tolerance) {
                r.status = SqpStatus::kkt;
                break;
            }
            VectorXd d, lam_c;
            bool any_active = false;
            subproblem(x, E, B, mu, d, lam_c, any_active);
            if (!finite(d)) {
                r.status = SqpStatus::line_search;
                break;
            }
            if (d.lpNorm<Eigen::Infinity>() <= 1e-15 * (1 + x.lpNorm<Eigen::Infinity>())) {
                r.status = SqpStatus::small_step;
                break;
            }
            // Powell's penalty update keeps mu above the multipliers.
            const double lmax = lam_c.size() ? lam_c.lpNorm<Eigen::Infinity>() : 0.0;
            mu = std::max(1.5 * lmax, 0.5 * (mu + 1.5 * lmax));

            const double v1 = violation_l1(E.c);
            const double phi0 = E.f + mu * v1;
            double D = E.grad.dot(d) - mu * v1;
            if (!(D < 0)) D = -d.dot(B * d);

            double alpha = 1.0;
            bool accepted = false;
            VectorXd xt;
            Evaluation Et;
            for (int bt = 0; bt <= o_.max_backtracks; ++bt) {
                xt = clamp(x + alpha * d);
                Et = eval(xt, false);
                const double phit = Et.f + mu * violation_l1(Et.c);
                if (std::isfinite(phit) && phit <= phi0 + 1e-4 * alpha * D) {
                    accepted = true;
                    break;
                }
                // safeguarded quadratic interpolation
                double next = 0.5 * alpha;
                if (std::isfinite(phit)) {
                    const double denom = 2 * (phit - phi0 - alpha * D);
                    if (denom > 0) next = std::clamp(-D * alpha * alpha / denom, 0.1 * alpha, 0.5 * alpha);
                }
                alpha = next;
            }
            if (!accepted) {
                if (!reset_used) {
                    reset_used = true;
                    first_update = true;
                    B = MatrixXd::Identity(n, n) * (gmax > 0 ? gmax / o_.initial_step : 1.0);
                    continue;
                }
                r.status = SqpStatus::line_search;
                break;
            }
            reset_used = false;
            if (!o_.final_derivatives && r.iterations + 1 == o_.max_iters) {
                // budget exhausted: keep the step, skip derivatives nobody will use
                x = xt;
                E = std::move(Et);
                stale = true;
                ++r.iterations;
                break;
            }
            Evaluation En = eval(xt, true);
            if (o_.line_refinement && !any_active && std::isfinite(En.f)) refine(x, d, E, alpha, mu, xt, En);
            if (!std::isfinite(En.f) || !finite(En.grad) || !finite(En.jac.reshaped())) {
                r.status = SqpStatus::line_search;
                break;
            }
            const VectorXd s = xt - x;
            VectorXd y = En.grad - E.grad;
            if (p_.m > 0) y -= (En.jac - E.jac).transpose() * lam_c;
            update_hessian(B, s, y, first_update);
            const double step = s.lpNorm<Eigen::Infinity>();
            x = xt;
            E = std::move(En);
            note_feasible(x, E);
            if (step <= 1e-14 * (1 + x.lpNorm<Eigen::Infinity>())) {
                r.status = SqpStatus::small_step;
                break;
            }
        }
        if (violation(E.c) > o_.tolerance && best_feasible) {
            x = best_feasible->first;
            E = best_feasible->second;
            stale = false;
        }
        r.x = x;
        r.f = E.f;
        r.max_violation = violation(E.c);
        if (stale) {
            r.kkt_residual = std::numeric_limits<double>::infinity();
            r.multipliers = VectorXd::Zero(p_.m);
        } else {
            r.kkt_residual = kkt_residual(p_, x, E, &lam);
            r.multipliers = lam.head(p_.m);
        }
        r.hessian = B;
        r.converged = r.kkt_residual <= o_.tolerance;
        return r;
    }

private:
    // Secant step along d when no constraint shapes the step: exact on quadratics, which gives
    // BFGS its finite termination.
    void refine(const VectorXd& x, const VectorXd& d, const Evaluation& E, double alpha, double mu, VectorXd& xt,
                Evaluation& En) const {
        const double D0 = E.grad.dot(d), Da = En.grad.dot(d);
        if (!(D0 < 0) || !(Da > D0)) return;
        double star = alpha * D0 / (D0 - Da);
        double amax = kInf;
        for (Index i = 0; i < p_.n; ++i) {
            if (d(i) > 0) amax = std::min(amax, (p_.upper(i) - x(i)) / d(i));
            if (d(i) < 0) amax = std::min(amax, (p_.lower(i) - x(i)) / d(i));
        }
        star = std::min({star, amax, 10 * alpha});
        if (!(star > 0) || std::abs(star / alpha - 1) < 1e-3) return;
        const VectorXd xs = clamp(x + star * d);
        Evaluation Es = eval(xs, true);
        const double phi_a = En.f + mu * violation_l1(En.c), phi_s = Es.f + mu * violation_l1(Es.c);
        if (std::isfinite(phi_s) && phi_s < phi_a && finite(Es.grad) && finite(Es.jac.reshaped())) {
            xt = xs;
            En = std::move(Es);
        }
    }

    void subproblem(const VectorXd& x, const Evaluation& E, const MatrixXd& B, double mu, VectorXd& d,
                    VectorXd& lam_c, bool& any_active) const {
        const Index n = p_.n, m = p_.m;
        std::vector<std::pair<Index, double>> bounds;  // (index, sign) rows: sign * d_i + slack >= 0
        for (Index i = 0; i < n; ++i) {
            if (std::isfinite(p_.lower(i))) bounds.push_back({i, 1.0});
            if (std::isfinite(p_.upper(i))) bounds.push_back({i, -1.0});
        }
        const Index nb = static_cast<Index>(bounds.size());
        auto fill_bounds = [&](MatrixXd& C, VectorXd& c, Index row0) {
            for (Index k = 0; k < nb; ++k) {
                const auto [i, sgn] = bounds[static_cast<std::size_t>(k)];
                C(row0 + k, i) = sgn;
                c(row0 + k) = sgn > 0 ? x(i) - p_.lower(i) : p_.upper(i) - x(i);
            }
        };
        {
            MatrixXd C = MatrixXd::Zero(m + nb, n);
            VectorXd c(m + nb);
            if (m > 0) {
                C.topRows(m) = E.jac;
                c.head(m) = E.c;
            }
            fill_bounds(C, c, m);
            QPResult q = solve_qp(B, E.grad, C, c);
            if (q.feasible) {
                d = q.x;
                lam_c = q.multipliers.head(m);
                any_active = q.multipliers.size() > 0 && q.multipliers.maxCoeff() > 0;
                return;
            }
        }
        // Elastic mode: one shared slack t >= 0 relaxes every general constraint, priced at rho.
        const double rho = std::max(1e3, 10 * mu) * (1 + E.grad.lpNorm<Eigen::Infinity>());
        MatrixXd G = MatrixXd::Zero(n + 1, n + 1);
        G.topLeftCorner(n, n) = B;
        G(n, n) = 1e-8 * (1 + B.diagonal().maxCoeff());
        VectorXd g(n + 1);
        g << E.grad, rho;
        MatrixXd C = MatrixXd::Zero(m + nb + 1, n + 1);
        VectorXd c(m + nb + 1);
        C.topLeftCorner(m, n) = E.jac;
        C.block(0, n, m, 1).setOnes();
        c.head(m) = E.c;
        MatrixXd Cb = MatrixXd::Zero(nb, n);
        VectorXd cb(nb);
        fill_bounds(Cb, cb, 0);
        C.block(m, 0, nb, n) = Cb;
        c.segment(m, nb) = cb;
        C(m + nb, n) = 1.0;
        c(m + nb) = 0.0;
        QPResult q = solve_qp(G, g, C, c);
        if (!q.feasible) {
            d = VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
            return;
        }
        d = q.x.head(n);
        lam_c = q.multipliers.head(m);
        any_active = true;
    }

    static void update_hessian(MatrixXd& B, const VectorXd& s, VectorXd y, bool& first) {
        const double sy = s.dot(y);
        if (first && sy > 0) {
            B = MatrixXd::Identity(s.size(), s.size()) * (y.squaredNorm() / sy);
        }
        first = false;
        const VectorXd Bs = B * s;
        const double sBs = s.dot(Bs);
        if (!(sBs > 0)) return;
        // Powell damping keeps B positive definite.
        if (sy < 0.2 * sBs) {
            const double theta = 0.8 * sBs / (sBs - sy);
            y = theta * y + (1 - theta) * Bs;
        }
        const double sy2 = s.dot(y);
        if (!(sy2 > 1e-300)) return;
        MatrixXd Bn = B + y * y.transpose() / sy2 - Bs * Bs.transpose() / sBs;
        Bn = 0.5 * (Bn + Bn.transpose());
        // rounding can still break definiteness on badly scaled updates; then skip the update
        if (Eigen::LLT<MatrixXd>(Bn).info() == Eigen::Success) B = std::move(Bn);
    }

    const Problem& p_;
    const SqpOptions& o_;
    Counters& k_;
};

}  // namespace

double kkt_residual(const Problem& p, const VectorXd& x, const Evaluation& e, VectorXd* multipliers) {
    const Index n = p.n, m = p.m;
    constexpr double kNear = 1e-3;
    std::vector<Index> rows;  // general constraint indices, then n + i (lower) / 2n + i (upper)
    for (Index i = 0; i < m; ++i)
        if (e.c(i) <= kNear) rows.push_back(i);
    for (Index i = 0; i < n; ++i) {
        if (std::isfinite(p.lower(i)) && x(i) - p.lower(i) <= kNear) rows.push_back(m + i);
        if (std::isfinite(p.upper(i)) && p.upper(i) - x(i) <= kNear) rows.push_back(m + n + i);
    }
    const Index k = static_cast<Index>(rows.size());
    MatrixXd A = MatrixXd::Zero(k, n);
    VectorXd slack(k);
    for (Index r = 0; r < k; ++r) {
        const Index id = rows[static_cast<std::size_t>(r)];
        if (id < m) {
            A.row(r) = e.jac.row(id);
            slack(r) = e.c(id);
        } else if (id < m + n) {
            A(r, id - m) = 1.0;
            slack(r) = x(id - m) - p.lower(id - m);
        } else {
            A(r, id - m - n) = -1.0;
            slack(r) = p.upper(id - m - n) - x(id - m - n);
        }
    }
    VectorXd lam = VectorXd::Zero(k);
    if (k > 0) {
        // NNLS: min 1/2 |grad - A' lam|^2, lam >= 0
        MatrixXd G = A * A.transpose();
        G.diagonal().array() += 1e-12 * (1 + G.diagonal().maxCoeff());
        QPResult q = solve_qp(G, -A * e.grad, MatrixXd::Identity(k, k), VectorXd::Zero(k));
        if (q.feasible) lam = q.x.cwiseMax(0.0);
    }
    const double stat = (e.grad - A.transpose() * lam).lpNorm<Eigen::Infinity>();
    double comp = 0;
    for (Index r = 0; r < k; ++r) comp = std::max(comp, lam(r) * std::max(0.0, slack(r)));
    if (multipliers) {
        multipliers->setZero(m + 2 * n);
        for (Index r = 0; r < k; ++r) (*multipliers)(rows[static_cast<std::size_t>(r)]) = lam(r);
    }
    return std::max({stat, violation(e.c), comp});
}

SqpResult minimize_constrained(const Problem& p, const VectorXd& x0, const SqpOptions& opts) {
    if (x0.size() != p.n) throw std::invalid_argument("start point has the wrong dimension");
    Counters k;
    Runner main(p, opts, k);
    SqpResult r = main.run(x0);
    if (r.max_violation > opts.tolerance) {
        // Feasibility phase: minimize 1/2 sum max(0, -c)^2 over the bounds from several starts.
        Problem feas;
        feas.n = p.n;
        feas.m = 0;
        feas.lower = p.lower;
        feas.upper = p.upper;
        feas.evaluate = [&p](const VectorXd& x, bool deriv, Evaluation& e) {
            Evaluation inner;
            p.evaluate(x, deriv, inner);
            const VectorXd v = (-inner.c).cwiseMax(0.0);
            e.f = 0.5 * v.squaredNorm();
            if (deriv) e.grad = -(inner.jac.transpose() * v);
            e.c.resize(0);
            e.jac.resize(0, x.size());
        };
        SqpOptions fo = opts;
        fo.tolerance = 1e-14;
        Runner phase(feas, fo, k);
        std::mt19937_64 rng(opts.seed);
        double best = r.max_violation;
        std::optional<VectorXd> start;
        const int total = opts.feasibility_starts + 2;
        for (int s = 0; s < total && !start; ++s) {
            VectorXd xs;
            if (s == 0) xs = r.x;
            else if (s == 1) xs = x0;
            else {
                xs.resize(p.n);
                for (Index i = 0; i < p.n; ++i) {
                    const bool lo = std::isfinite(p.lower(i)), hi = std::isfinite(p.upper(i));
                    const double spread = 10 * (1 + std::abs(x0(i)));
                    const double a = lo ? p.lower(i) : (hi ? p.upper(i) - 2 * spread : x0(i) - spread);
                    const double b = hi ? p.upper(i) : a + 2 * spread;
                    xs(i) = std::uniform_real_distribution<double>(a, b)(rng);
                }
            }
            SqpResult f = phase.run(xs);
            Evaluation e = main.eval(f.x, false);
            const double v = violation(e.c);
            best = std::min(best, v);
            if (v <= 0.5 * opts.tolerance) start = f.x;
        }
        if (!start) throw InfeasibleError(best, total);
        const int iters = r.iterations;
        r = main.run(*start);
        r.iterations += iters;
        if (r.max_violation > opts.tolerance) throw InfeasibleError(r.max_violation, total);
    }
    r.evaluations = k.evaluations;
    r.derivative_evaluations = k.derivative_evaluations;
    return r;
}

}  // namespace flowscribe::inverse
