#include "flowscribe/inverse/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace flowscribe::inverse {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Givens rotation mapping (a, b) to (h, 0).
struct Givens {
    double c = 1, s = 0, h = 0;
    Givens(double a, double b) : h(std::hypot(a, b)) {
        if (h > 0) {
            c = a / h;
            s = b / h;
        }
    }
};

void rotate_columns(Eigen::MatrixXd& J, Eigen::Index i, Eigen::Index j, const Givens& g) {
    for (Eigen::Index k = 0; k < J.rows(); ++k) {
        const double a = J(k, i), b = J(k, j);
        J(k, i) = g.c * a + g.s * b;
        J(k, j) = -g.s * a + g.c * b;
    }
}

// Active-set factorization: J' N = [R; 0] with J = L^-T Q.
class ActiveSet {
public:
    ActiveSet(const Eigen::MatrixXd& Linv_t) : J_(Linv_t), R_(Eigen::MatrixXd::Zero(J_.rows(), J_.rows())) {}

    Eigen::Index size() const { return q_; }
    const Eigen::MatrixXd& J() const { return J_; }

    Eigen::VectorXd solve_r(const Eigen::VectorXd& d) const {
        return R_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d.head(q_));
    }

    bool add(Eigen::VectorXd d) {
        const Eigen::Index n = J_.rows();
        for (Eigen::Index j = n - 1; j > q_; --j) {
            if (d(j) == 0) continue;
            Givens g(d(j - 1), d(j));
            d(j - 1) = g.h;
            d(j) = 0;
            rotate_columns(J_, j - 1, j, g);
        }
        if (std::abs(d(q_)) <= 1e-14 * (1 + d.head(q_ + 1).norm())) return false;
        R_.col(q_).head(q_ + 1) = d.head(q_ + 1);
        ++q_;
        return true;
    }

    void remove(Eigen::Index l) {
        for (Eigen::Index k = l; k + 1 < q_; ++k) R_.col(k) = R_.col(k + 1);
        R_.col(q_ - 1).setZero();
        for (Eigen::Index j = l; j + 1 < q_; ++j) {
            Givens g(R_(j, j), R_(j + 1, j));
            if (g.h == 0) continue;
            for (Eigen::Index k = j; k < q_ - 1; ++k) {
                const double a = R_(j, k), b = R_(j + 1, k);
                R_(j, k) = g.c * a + g.s * b;
                R_(j + 1, k) = -g.s * a + g.c * b;
            }
            R_(j + 1, j) = 0;
            rotate_columns(J_, j, j + 1, g);
        }
        --q_;
    }

private:
    Eigen::MatrixXd J_;
    Eigen::MatrixXd R_;
    Eigen::Index q_ = 0;
};

}  // namespace

QPResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& C,
                  const Eigen::VectorXd& c, int max_iters) {
    const Eigen::Index n = G.rows(), m = C.rows();
    if (G.cols() != n || g.size() != n || (m > 0 && C.cols() != n) || c.size() != m)
        throw std::invalid_argument("QP dimensions do not agree");
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("QP Hessian is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    ActiveSet act(L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n)));
    if (max_iters <= 0) max_iters = static_cast<int>(10 * (n + m)) + 50;

    QPResult out;
    out.x = -llt.solve(g);
    out.multipliers = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::Index> A;  // active constraint rows, in factorization order
    std::vector<char> is_active(static_cast<std::size_t>(m), 0);
    Eigen::VectorXd u(0);

    auto slack = [&](Eigen::Index i) { return C.row(i).dot(out.x) + c(i); };
    auto scale = [&](Eigen::Index i) { return 1.0 + std::abs(c(i)) + C.row(i).norm() * out.x.norm(); };

    while (true) {
        Eigen::Index p = -1;
        double worst = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (is_active[static_cast<std::size_t>(i)]) continue;
            const double s = slack(i);
            if (s < -1e-12 * scale(i) && s < worst) {
                worst = s;
                p = i;
            }
        }
        if (p < 0) break;
        const Eigen::VectorXd np = C.row(p).transpose();
        Eigen::VectorXd up(act.size() + 1);
        up << u, 0.0;

        while (true) {
            if (++out.iterations > max_iters) {
                out.value = 0.5 * out.x.dot(G * out.x) + g.dot(out.x);
                return out;
            }
            const Eigen::Index q = act.size();
            const Eigen::VectorXd d = act.J().transpose() * np;
            const Eigen::VectorXd z = act.J().rightCols(n - q) * d.tail(n - q);
            const Eigen::VectorXd r = act.solve_r(d);

            double t1 = kInf;
            Eigen::Index l = -1;
            for (Eigen::Index j = 0; j < q; ++j) {
                if (r(j) > 1e-14) {
                    const double ratio = up(j) / r(j);
                    if (ratio < t1) {
                        t1 = ratio;
                        l = j;
                    }
                }
            }
            const double zn = z.dot(np);
            const double t2 = std::abs(zn) > 1e-14 * (1 + np.squaredNorm()) ? -slack(p) / zn : kInf;
            const double t = std::min(t1, t2);
            if (t == kInf) {  // primal infeasible
                out.value = 0.5 * out.x.dot(G * out.x) + g.dot(out.x);
                return out;
            }
            if (t2 < kInf) out.x += t * z;
            up.head(q) -= t * r;
            up(q) += t;
            if (t2 <= t1) {
                if (!act.add(d)) {  // numerically dependent; treat as infeasible
                    out.value = 0.5 * out.x.dot(G * out.x) + g.dot(out.x);
                    return out;
                }
                A.push_back(p);
                is_active[static_cast<std::size_t>(p)] = 1;
                u = up;
                break;
            }
            is_active[static_cast<std::size_t>(A[static_cast<std::size_t>(l)])] = 0;
            A.erase(A.begin() + l);
            act.remove(l);
            Eigen::VectorXd shrunk(q);
            shrunk << up.head(l), up.segment(l + 1, q - l);
            up = shrunk;
        }
    }
    for (std::size_t k = 0; k < A.size(); ++k) out.multipliers(A[k]) = std::max(0.0, u(static_cast<Eigen::Index>(k)));
    out.value = 0.5 * out.x.dot(G * out.x) + g.dot(out.x);
    out.feasible = true;
    return out;
}

}  // namespace flowscribe::inverse
