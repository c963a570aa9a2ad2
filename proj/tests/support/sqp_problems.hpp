#pragma once

#include <initializer_list>
#include <limits>
#include <random>
#include <vector>

#include "flowscribe/inverse/sqp.hpp"

namespace sqp_problems {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using flowscribe::inverse::Problem;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline VectorXd vec(std::initializer_list<double> v) {
    VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

/// min (x-1)^2 + (y-2.5)^2 s.t. x - 2y + 2 >= 0, -x - 2y + 6 >= 0, -x + 2y + 2 >= 0, x, y >= 0.
/// Solution (1.4, 1.7), f* = 0.8, first constraint active with multiplier 0.8.
inline Problem hand_quadratic() {
    auto f = [](const VectorXd& x, VectorXd* g) {
        if (g) *g = vec({2 * (x(0) - 1), 2 * (x(1) - 2.5)});
        return (x(0) - 1) * (x(0) - 1) + (x(1) - 2.5) * (x(1) - 2.5);
    };
    MatrixXd A(3, 2);
    A << 1, -2, -1, -2, -1, 2;
    const VectorXd b = vec({2, 6, 2});
    auto c = [A, b](const VectorXd& x, VectorXd& out, MatrixXd* J) {
        out = A * x + b;
        if (J) *J = A;
    };
    return flowscribe::inverse::make_problem(2, f, vec({0, 0}), vec({kInf, kInf}), 3, c);
}

/// Rosenbrock on [-2, 2]^2, minimum at (1, 1).
inline Problem rosenbrock() {
    auto f = [](const VectorXd& x, VectorXd* g) {
        const double a = 1 - x(0), b = x(1) - x(0) * x(0);
        if (g) *g = vec({-2 * a - 400 * x(0) * b, 200 * b});
        return a * a + 100 * b * b;
    };
    return flowscribe::inverse::make_problem(2, f, vec({-2, -2}), vec({2, 2}));
}

/// Random linear constraints plus disk keep-outs around a known feasible point, box [-6, 6]^n,
/// quadratic objective pulling toward a random target.
struct FuzzedProblem {
    Problem problem;
    VectorXd x0;
};

inline FuzzedProblem fuzzed_problem(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1, 1);
    const int n = 2 + static_cast<int>(rng() % 5);
    const int m_lin = static_cast<int>(rng() % 4), m_disk = 1 + static_cast<int>(rng() % 4);
    VectorXd feasible_pt(n);
    for (auto& v : feasible_pt) v = 3 * U(rng);
    MatrixXd A(m_lin, n);
    VectorXd b(m_lin);
    for (int i = 0; i < m_lin; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = U(rng);
        b(i) = -A.row(i).dot(feasible_pt) + 0.5 * (1 + U(rng));
    }
    std::vector<VectorXd> centers;
    std::vector<double> radii;
    for (int i = 0; i < m_disk; ++i) {
        VectorXd k(n);
        for (auto& v : k) v = 4 * U(rng);
        double rad = 0.5 + std::abs(U(rng));
        if ((k - feasible_pt).norm() <= rad) rad = 0.5 * (k - feasible_pt).norm();
        centers.push_back(k);
        radii.push_back(rad);
    }
    VectorXd target(n);
    for (auto& v : target) v = 4 * U(rng);
    auto f = [target](const VectorXd& x, VectorXd* g) {
        if (g) *g = 2 * (x - target);
        return (x - target).squaredNorm();
    };
    auto c = [=](const VectorXd& x, VectorXd& out, MatrixXd* J) {
        out.resize(m_lin + m_disk);
        if (J) J->resize(m_lin + m_disk, n);
        for (int i = 0; i < m_lin; ++i) {
            out(i) = A.row(i).dot(x) + b(i);
            if (J) J->row(i) = A.row(i);
        }
        for (int i = 0; i < m_disk; ++i) {  // keep-out: |x - k|^2 / r^2 - 1 >= 0
            const VectorXd d = x - centers[i];
            out(m_lin + i) = d.squaredNorm() / (radii[i] * radii[i]) - 1;
            if (J) J->row(m_lin + i) = 2 * d.transpose() / (radii[i] * radii[i]);
        }
    };
    VectorXd x0(n);
    for (auto& v : x0) v = 5 * U(rng);
    return {flowscribe::inverse::make_problem(n, f, VectorXd::Constant(n, -6), VectorXd::Constant(n, 6), m_lin + m_disk, c),
            x0};
}

}  // namespace sqp_problems
