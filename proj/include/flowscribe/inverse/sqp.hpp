#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace flowscribe::inverse {

/// One evaluation of a smooth constrained problem. Constraints are c(x) >= 0.
struct Evaluation {
    double f = 0.0;
    Eigen::VectorXd grad;  // filled when derivatives are requested
    Eigen::VectorXd c;
    Eigen::MatrixXd jac;   // m x n, filled when derivatives are requested
};

struct Problem {
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    Eigen::VectorXd lower;  // may hold -inf
    Eigen::VectorXd upper;  // may hold +inf
    std::function<void(const Eigen::VectorXd& x, bool derivatives, Evaluation& out)> evaluate;
};

/// Builds a Problem from separate callbacks.
Problem make_problem(Eigen::Index n, std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> f,
                     Eigen::VectorXd lower, Eigen::VectorXd upper, Eigen::Index m = 0,
                     std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*)> c = {});

struct SqpOptions {
    double tolerance = 1e-6;
    int max_iters = 200;
    /// Typical first step length in decision-variable units (sets the initial Hessian scale).
    double initial_step = 1.0;
    int max_backtracks = 30;
    /// Extra secant evaluation along unconstrained steps (exact line search on quadratics).
    bool line_refinement = true;
    /// When false, the step that exhausts max_iters is taken without evaluating derivatives at its end
    /// (the KKT residual is then reported as +inf and converged is false).
    bool final_derivatives = true;
    /// Random starts tried by the feasibility phase after the start point itself.
    int feasibility_starts = 8;
    std::uint64_t seed = 0;
    /// Warm-start Hessian approximation (n x n, symmetric positive definite); scaled identity when empty.
    Eigen::MatrixXd initial_hessian;
};

enum class SqpStatus { kkt, small_step, line_search, max_iters };
std::string to_string(SqpStatus s);

struct SqpResult {
    Eigen::VectorXd x;
    double f = 0.0;
    double kkt_residual = 0.0;
    double max_violation = 0.0;
    Eigen::VectorXd multipliers;  // general constraints
    Eigen::MatrixXd hessian;      // final quasi-Newton approximation, reusable as a warm start
    int iterations = 0;
    int evaluations = 0;
    int derivative_evaluations = 0;
    bool converged = false;  // kkt_residual <= tolerance
    SqpStatus status = SqpStatus::max_iters;
};

/// Certificate: no start of the feasibility phase reached violation <= tolerance.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(double best_violation, int starts);
    double best_violation() const { return best_violation_; }
    int starts() const { return starts_; }

private:
    double best_violation_;
    int starts_;
};

/// KKT residual at x: max of stationarity (inf-norm, nonnegative multipliers fitted by NNLS over
/// near-active constraints and bounds), primal violation, and complementarity.
double kkt_residual(const Problem& p, const Eigen::VectorXd& x, const Evaluation& e, Eigen::VectorXd* multipliers = nullptr);

/// Sequential quadratic programming: damped BFGS Hessian, dual active-set QP subproblems with an
/// elastic fallback, L1 merit line search. Deterministic. Bounds hold exactly on return, general
/// constraints to the tolerance, or InfeasibleError is thrown.
SqpResult minimize_constrained(const Problem& p, const Eigen::VectorXd& x0, const SqpOptions& opts = {});

}  // namespace flowscribe::inverse
