#include "peduncle/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "peduncle/qp.hpp"

namespace peduncle {

void SolverConfig::validate() const {
  if (!(mse_target > 0.0)) throw ConfigError("mse_target must be positive");
  if (max_restarts < 0) throw ConfigError("max_restarts must be >= 0");
  if (max_iterations_per_run < 1) throw ConfigError("max_iterations_per_run must be >= 1");
  if (!(relative_step_tolerance > 0.0)) throw ConfigError("relative_step_tolerance must be positive");
  if (!(relative_cost_tolerance > 0.0)) throw ConfigError("relative_cost_tolerance must be positive");
  if (!(constraint_tolerance > 0.0)) throw ConfigError("constraint_tolerance must be positive");
  if (!(kkt_tolerance > 0.0)) throw ConfigError("kkt_tolerance must be positive");
  if (initial_offset_magnitude && !(*initial_offset_magnitude > 0.0)) {
    throw ConfigError("initial_offset_magnitude must be positive");
  }
}

Vec3 initial_guess(const Trial& trial, std::optional<double> offset) {
  const Vec3 start = apple_position_world(trial.samples.front(), trial.grasp_point);
  Vec3 mean = Vec3::Zero();
  for (const auto& f : measured_forces_world(trial)) mean += f;
  mean /= static_cast<double>(trial.samples.size());
  const Vec3 direction = mean.norm() < 1e-9 ? Vec3::UnitZ() : Vec3(mean.normalized());
  return start + offset.value_or(trial.spring.l) * direction;
}

namespace {

constexpr int kMaxHalvings = 30;
constexpr double kArmijo = 1e-4;

double violation_sum(const std::vector<double>& c) {
  double s = 0.0;
  for (double v : c) s += std::max(v, 0.0);
  return s;
}

double violation_max(const std::vector<double>& c) {
  double s = -std::numeric_limits<double>::infinity();
  for (double v : c) s = std::max(s, v);
  return s;
}

struct Iterate {
  Vec3 x;
  ModelEval eval;
};

// Eigenvalue floor keeps the QP strictly convex when the Lagrangian Hessian is not.
Mat3 convexify(const Mat3& B) {
  const Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (B + B.transpose()));
  Vec3 ev = es.eigenvalues();
  const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1.0);
  const double floor = 1e-8 * scale;
  for (int i = 0; i < 3; ++i) ev(i) = std::max(std::abs(ev(i)), floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Mat3 lagrangian_hessian(const Iterate& it, const std::vector<Vec3>& fruit, const Eigen::VectorXd& lambda) {
  Mat3 B = it.eval.hessian;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= 0.0) continue;
    const Vec3 d = it.x - fruit[static_cast<std::size_t>(i)];
    const double rho = d.norm();
    B -= lambda(i) * (Mat3::Identity() - d * d.transpose() / (rho * rho)) / rho;
  }
  return B;
}

QpSolution solve_subproblem(const Mat3& B, const Iterate& it) {
  const auto m = static_cast<Eigen::Index>(it.eval.constraint_values.size());
  QpProblem qp;
  qp.G = B;
  qp.g = it.eval.gradient;
  qp.A.resize(m, 3);
  qp.b.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    qp.A.row(i) = it.eval.constraint_jacobian[static_cast<std::size_t>(i)].transpose();
    qp.b(i) = -it.eval.constraint_values[static_cast<std::size_t>(i)];
  }
  auto sol = solve_qp(qp);
  if (sol.status == QpStatus::Optimal) return sol;

  // Inconsistent linearization: relax the right-hand side toward the current
  // violation until the subproblem admits a solution.
  const double vmax = std::max(violation_max(it.eval.constraint_values), 0.0);
  for (double theta : {0.5, 0.9, 0.99, 1.0}) {
    QpProblem relaxed = qp;
    relaxed.b.array() += theta * vmax + (theta == 1.0 ? 1e-6 : 0.0);
    sol = solve_qp(relaxed);
    if (sol.status == QpStatus::Optimal) return sol;
  }
  // Last resort: unconstrained Newton step.
  sol.status = QpStatus::Infeasible;
  sol.x = -B.ldlt().solve(it.eval.gradient);
  sol.multipliers = Eigen::VectorXd::Zero(m);
  return sol;
}

double kkt_residual(const Iterate& it, const Eigen::VectorXd& lambda) {
  Vec3 r = it.eval.gradient;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    r += lambda(i) * it.eval.constraint_jacobian[static_cast<std::size_t>(i)];
  }
  return r.norm();
}

}  // namespace

FitResult minimize(const Trial& trial, const Vec3& x0, const SolverConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const TrialModel model(trial);
  const auto& fruit = model.fruit_positions();
  const auto m = static_cast<Eigen::Index>(model.size());

  FitResult result;
  Iterate cur;
  cur.x = x0;
  try {
    cur.eval = model.evaluate(x0);
  } catch (const SingularityError& e) {
    throw EvaluationFailure(std::string("initial point is singular: ") + e.what());
  }

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  double penalty = 1.0;
  double kkt = std::numeric_limits<double>::infinity();
  double kkt_prev = std::numeric_limits<double>::infinity();
  bool tolerance_hit = false;
  bool stopped = false;
  int steps = 0;
  if (config.record_trace) result.trace.push_back({0, cur.x, cur.eval.cost});

  for (int iter = 1; iter <= config.max_iterations_per_run; ++iter) {
    const Mat3 B = convexify(lagrangian_hessian(cur, fruit, lambda));
    const QpSolution qp = solve_subproblem(B, cur);
    const Vec3 step = qp.x;
    lambda = qp.multipliers;
    kkt = kkt_residual(cur, lambda);

    const double viol = violation_max(cur.eval.constraint_values);
    const bool feasible = viol <= config.constraint_tolerance;
    if (feasible && kkt < config.kkt_tolerance) {
      stopped = true;
      break;
    }
    // Relative tolerances end the run once optimality has stopped improving;
    // while Newton steps still shrink the KKT residual, keep iterating.
    const bool small_step = step.norm() <= config.relative_step_tolerance * (1.0 + cur.x.norm());
    if (feasible && (small_step || tolerance_hit) && kkt >= 0.5 * kkt_prev) {
      stopped = true;
      break;
    }
    kkt_prev = kkt;
    tolerance_hit = false;

    if (lambda.size() > 0) penalty = std::max(penalty, 1.5 * lambda.maxCoeff() + 1e-6);
    const double merit0 = cur.eval.cost + penalty * violation_sum(cur.eval.constraint_values);
    const double slope = cur.eval.gradient.dot(step) - penalty * violation_sum(cur.eval.constraint_values);

    // Near the optimum the predicted decrease falls below the rounding noise of
    // the cost; allow that much slack so unit Newton steps are not rejected.
    const double rounding = 10.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(merit0));
    double alpha = 1.0;
    int singular_halvings = 0;
    bool accepted = false;
    Iterate trial_it;
    for (int ls = 0; ls < 60; ++ls) {
      trial_it.x = cur.x + alpha * step;
      try {
        trial_it.eval = model.evaluate(trial_it.x);
      } catch (const SingularityError&) {
        if (++singular_halvings > kMaxHalvings) {
          throw EvaluationFailure("iterate hit the model singularity; step halving did not recover");
        }
        alpha *= 0.5;
        continue;
      }
      const double merit = trial_it.eval.cost + penalty * violation_sum(trial_it.eval.constraint_values);
      if (merit <= merit0 + kArmijo * alpha * std::min(slope, 0.0) + rounding) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No descent left at machine precision.
      stopped = true;
      break;
    }

    const double cost_change = std::abs(trial_it.eval.cost - cur.eval.cost);
    const double moved = (trial_it.x - cur.x).norm();
    cur = std::move(trial_it);
    ++steps;
    if (config.record_trace) result.trace.push_back({iter, cur.x, cur.eval.cost});

    tolerance_hit = violation_max(cur.eval.constraint_values) <= config.constraint_tolerance &&
                    (cost_change <= config.relative_cost_tolerance * (1.0 + cur.eval.cost) ||
                     moved <= config.relative_step_tolerance * (1.0 + cur.x.norm()));
  }
  if (!stopped) {
    // Iteration cap: report optimality at the final iterate.
    const QpSolution qpf = solve_subproblem(convexify(lagrangian_hessian(cur, fruit, lambda)), cur);
    kkt = kkt_residual(cur, qpf.multipliers);
  }

  result.attachment = cur.x;
  result.final_mse = cur.eval.cost;
  result.iterations_total = steps;
  result.max_constraint_violation = violation_max(cur.eval.constraint_values);
  result.kkt_residual = kkt;
  result.converged = stopped && result.max_constraint_violation <= config.constraint_tolerance &&
                     kkt < config.kkt_tolerance;
  if (!result.converged) {
    result.failure_reason = stopped ? "stopped without meeting first-order optimality" : "iteration limit reached";
  }
  result.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

namespace {

bool better(const FitResult& a, const FitResult& b, double tol) {
  const bool fa = a.max_constraint_violation <= tol;
  const bool fb = b.max_constraint_violation <= tol;
  if (fa != fb) return fa;
  if (!fa) return a.max_constraint_violation < b.max_constraint_violation;
  return a.final_mse < b.final_mse;
}

}  // namespace

FitResult fit(const Trial& trial, const SolverConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count(); };

  const Vec3 x0 = initial_guess(trial, config.initial_offset_magnitude);
  FitResult best;
  try {
    best = minimize(trial, x0, config);
  } catch (const EvaluationFailure& e) {
    const TrialModel model(trial);
    best.attachment = x0;
    best.final_mse = model.cost(x0);
    best.max_constraint_violation = model.max_violation(x0);
    best.converged = false;
    best.failure_reason = e.what();
    best.runtime = elapsed();
    return best;
  }

  int iterations = best.iterations_total;
  std::vector<TraceEntry> trace = std::move(best.trace);
  Vec3 seed = best.attachment;
  int restarts = 0;
  double last_mse = best.final_mse;
  while (last_mse > config.mse_target && restarts < config.max_restarts) {
    ++restarts;
    FitResult run;
    try {
      run = minimize(trial, seed, config);
    } catch (const EvaluationFailure& e) {
      best.failure_reason = e.what();
      break;
    }
    for (auto& entry : run.trace) {
      if (entry.iteration == 0) continue;  // the reseed point, already the last entry
      entry.iteration += iterations;
      trace.push_back(entry);
    }
    iterations += run.iterations_total;
    seed = run.attachment;
    last_mse = run.final_mse;
    if (better(run, best, config.constraint_tolerance)) best = std::move(run);
  }

  best.iterations_total = iterations;
  best.restarts_used = restarts;
  best.trace = std::move(trace);
  best.runtime = elapsed();
  return best;
}

}  // namespace peduncle
