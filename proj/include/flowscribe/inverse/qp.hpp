#pragma once

#include <Eigen/Dense>

namespace flowscribe::inverse {

struct QPResult {
    Eigen::VectorXd x;
    Eigen::VectorXd multipliers;  // one per constraint row, >= 0, zero when inactive
    double value = 0.0;
    bool feasible = false;
    int iterations = 0;
};

/// Strictly convex QP:  min 1/2 x'Gx + g'x  s.t.  C x + c >= 0  (row-wise).
/// Dual active-set method of Goldfarb and Idnani. Throws std::invalid_argument if G is not positive definite.
QPResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g, const Eigen::MatrixXd& C,
                  const Eigen::VectorXd& c, int max_iters = 0);

}  // namespace flowscribe::inverse
