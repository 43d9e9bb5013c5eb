#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peduncle/spring_model.hpp"

namespace peduncle {

struct TrialMetrics {
  std::string trial_id;
  Label label = Label::Success;
  double final_mse = 0.0;                   // N^2
  std::optional<double> localization_error;  // m, absent without ground truth
  std::optional<double> orientation_error;   // degrees, absent without ground truth
  double runtime = 0.0;                      // s
  bool converged = false;
};

struct SummaryStats {
  std::size_t count = 0;
  double median = 0.0;
  double iqr = 0.0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline double localization_error(const Vec3& estimate, const Vec3& truth) {
  return (estimate - truth).norm();
}

/// Angle at the initial fruit position between the true and estimated attachment points.
inline double orientation_error(const Vec3& estimate, const Vec3& truth, const Vec3& fruit0) {
  return angle_between<double>(truth - fruit0, estimate - fruit0);
}

/// Quantile by linear interpolation between order statistics (p in [0, 1]).
double quantile(std::span<const double> sorted, double p);

/// Median, IQR (linear-interpolation quartiles), mean and sample standard deviation.
SummaryStats summarize(std::span<const double> values);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Two-sided Welch unequal-variance t-test.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with dof degrees of freedom.
double student_t_cdf(double t, double dof);

struct MetricComparison {
  SummaryStats success;
  SummaryStats failure;
  WelchResult welch;
};

struct ClassComparison {
  MetricComparison localization_error;
  MetricComparison final_mse;
};

/// Welch tests on localization error and final MSE between the two classes.
ClassComparison class_comparison(std::span<const TrialMetrics> success, std::span<const TrialMetrics> failure);

}  // namespace peduncle
