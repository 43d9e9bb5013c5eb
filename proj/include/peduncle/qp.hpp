#pragma once

#include <vector>

#include <Eigen/Dense>

namespace peduncle {

/// Strictly convex inequality-constrained QP
///   minimize   1/2 x^T G x + g^T x
///   subject to A x <= b
/// G must be symmetric positive definite.
struct QpProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;  // one row per constraint
  Eigen::VectorXd b;
};

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct QpSolution {
  QpStatus status = QpStatus::Optimal;
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // >= 0, one per constraint, zero when inactive
  std::vector<int> active;
  int iterations = 0;
};

/// Dual active-set method (Goldfarb & Idnani). Starts from the unconstrained
/// minimizer and adds the most violated constraint each pass, so no feasible
/// starting point is required and infeasibility is detected directly.
QpSolution solve_qp(const QpProblem& problem, double feasibility_tol = 1e-12, int max_iterations = 500);

}  // namespace peduncle
