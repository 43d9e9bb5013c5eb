#include "peduncle/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace peduncle {

namespace {

struct ActiveProjection {
  Eigen::MatrixXd H;      // reduced inverse Hessian
  Eigen::MatrixXd Nstar;  // pseudo-inverse of the active normals
};

// Recomputed from scratch on every change; the active set never exceeds the
// number of variables, which is tiny for our problems.
ActiveProjection project(const Eigen::MatrixXd& Ginv, const Eigen::MatrixXd& N) {
  ActiveProjection out;
  if (N.cols() == 0) {
    out.H = Ginv;
    out.Nstar.resize(0, Ginv.rows());
    return out;
  }
  const Eigen::MatrixXd GinvN = Ginv * N;
  const Eigen::MatrixXd M = N.transpose() * GinvN;
  out.Nstar = M.ldlt().solve(GinvN.transpose());
  out.H = Ginv - GinvN * out.Nstar;
  return out;
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, double feasibility_tol, int max_iterations) {
  const Eigen::Index n = problem.G.rows();
  const Eigen::Index m = problem.A.rows();
  const Eigen::LLT<Eigen::MatrixXd> llt(problem.G);
  const Eigen::MatrixXd Ginv = llt.solve(Eigen::MatrixXd::Identity(n, n));

  QpSolution sol;
  sol.x = -Ginv * problem.g;
  sol.multipliers = Eigen::VectorXd::Zero(m);

  std::vector<int> active;
  std::vector<double> u;
  const double inf = std::numeric_limits<double>::infinity();

  auto normals = [&](const std::vector<int>& set) {
    Eigen::MatrixXd N(n, static_cast<Eigen::Index>(set.size()));
    for (std::size_t j = 0; j < set.size(); ++j) N.col(static_cast<Eigen::Index>(j)) = -problem.A.row(set[j]).transpose();
    return N;
  };

  for (int iter = 0; iter < max_iterations; ++iter) {
    sol.iterations = iter + 1;
    // Slack of every constraint: b - A x >= 0 when satisfied.
    const Eigen::VectorXd slack = problem.b - problem.A * sol.x;
    int p = -1;
    double worst = -feasibility_tol;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double scale = 1.0 + problem.A.row(j).norm();
      if (slack(j) / scale < worst) {
        bool is_active = false;
        for (int a : active) is_active = is_active || (a == j);
        if (!is_active) {
          worst = slack(j) / scale;
          p = static_cast<int>(j);
        }
      }
    }
    if (p < 0) {
      sol.status = QpStatus::Optimal;
      sol.active = active;
      for (std::size_t j = 0; j < active.size(); ++j) sol.multipliers(active[j]) = u[j];
      return sol;
    }

    const Eigen::VectorXd np = -problem.A.row(p).transpose();
    double u_plus = 0.0;
    // Each partial step drops one active constraint, so this terminates.
    for (;;) {
      const auto proj = project(Ginv, normals(active));
      const Eigen::VectorXd z = proj.H * np;
      const Eigen::VectorXd r = proj.Nstar * np;

      double t1 = inf;
      int drop = -1;
      for (Eigen::Index j = 0; j < r.size(); ++j) {
        if (r(j) > 0.0) {
          const double ratio = u[static_cast<std::size_t>(j)] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            drop = static_cast<int>(j);
          }
        }
      }
      // Full step that makes constraint p active: -s_p(x) / (z . n_p).
      const double curvature = z.dot(np);
      const bool independent = curvature > 1e-14 * np.squaredNorm() * Ginv.norm();
      const double t2_step = independent ? -(problem.b(p) - problem.A.row(p).dot(sol.x)) / curvature : inf;

      if (std::isinf(t1) && std::isinf(t2_step)) {
        sol.status = QpStatus::Infeasible;
        sol.active = active;
        return sol;
      }
      if (std::isinf(t2_step)) {
        for (std::size_t j = 0; j < u.size(); ++j) u[j] -= t1 * r(static_cast<Eigen::Index>(j));
        u_plus += t1;
        active.erase(active.begin() + drop);
        u.erase(u.begin() + drop);
        continue;
      }
      const double t = std::min(t1, t2_step);
      sol.x += t * z;
      for (std::size_t j = 0; j < u.size(); ++j) u[j] -= t * r(static_cast<Eigen::Index>(j));
      u_plus += t;
      if (t2_step <= t1) {
        active.push_back(p);
        u.push_back(u_plus);
        break;
      }
      active.erase(active.begin() + drop);
      u.erase(u.begin() + drop);
    }
  }
  sol.status = QpStatus::IterationLimit;
  sol.active = active;
  for (std::size_t j = 0; j < active.size(); ++j) sol.multipliers(active[j]) = u[j];
  return sol;
}

}  // namespace peduncle
