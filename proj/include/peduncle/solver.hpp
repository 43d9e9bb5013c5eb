#pragma once

#include <optional>
#include <string>
#include <vector>

#include "peduncle/spring_model.hpp"

namespace peduncle {

struct SolverConfig {
  double mse_target = 5.0;                 // N^2, reseed while above
  int max_restarts = 5;
  int max_iterations_per_run = 300;
  double relative_step_tolerance = 1e-8;   // m
  double relative_cost_tolerance = 1e-10;
  double constraint_tolerance = 1e-8;      // m
  double kkt_tolerance = 1e-6;             // N^2/m, first-order optimality for converged=true
  std::optional<double> initial_offset_magnitude;  // m, defaults to the spring resting length
  bool record_trace = false;

  void validate() const;
  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct TraceEntry {
  int iteration = 0;
  Vec3 attachment = Vec3::Zero();
  double cost = 0.0;
};

struct FitResult {
  Vec3 attachment = Vec3::Zero();  // estimated r_O in {W}
  double final_mse = 0.0;
  int iterations_total = 0;
  int restarts_used = 0;
  double runtime = 0.0;  // s, wall clock
  bool converged = false;
  double max_constraint_violation = 0.0;  // max_t (l - |d_t|), m
  double kkt_residual = 0.0;              // |grad f + sum lambda_t grad c_t|
  std::string failure_reason;
  std::vector<TraceEntry> trace;
};

/// r_{a,0} + offset * unit mean world force; world +z when the mean force vanishes.
Vec3 initial_guess(const Trial& trial, std::optional<double> offset = std::nullopt);

/// One SQP run from x0. Throws EvaluationFailure when the iterate lands on the
/// model singularity and 30 step halvings do not recover.
FitResult minimize(const Trial& trial, const Vec3& x0, const SolverConfig& config = {});

/// minimize from initial_guess, then reseed from the previous output while the
/// MSE exceeds the target. Returns the best feasible iterate over all runs.
FitResult fit(const Trial& trial, const SolverConfig& config = {});

}  // namespace peduncle
