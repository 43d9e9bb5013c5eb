#pragma once

#include <optional>
#include <string>
#include <vector>

#include "peduncle/geometry.hpp"

namespace peduncle {

/// Linear tension spring standing in for the peduncle.
struct SpringParams {
  double k = 632.0;  // N/m
  double l = 0.10;   // m, resting length

  void validate() const;
  friend bool operator==(const SpringParams&, const SpringParams&) = default;
};

struct TrialSample {
  double t = 0.0;
  RigidTransform pose;  // {W}<-{S}
  Wrench wrench;        // measured, sensor frame

  friend bool operator==(const TrialSample&, const TrialSample&) = default;
};

enum class Label { Success, Failure };

const char* to_string(Label label);
Label label_from_string(const std::string& s);

/// One pull: the recorded series plus everything needed to fit and score it.
struct Trial {
  std::string id;
  Label label = Label::Success;
  SpringParams spring;
  Vec3 grasp_point = Vec3::Zero();  // fruit position in {S}, constant
  std::optional<Vec3> ground_truth;  // attachment point in {W}
  std::vector<TrialSample> samples;

  /// Throws ValidationError naming the offending sample.
  void validate() const;

  friend bool operator==(const Trial&, const Trial&) = default;
};

/// Cost, gradient and tension constraints at one candidate attachment point.
struct ModelEval {
  double cost = 0.0;                         // N^2
  Vec3 gradient = Vec3::Zero();              // N^2/m
  std::vector<double> constraint_values;     // l - |d_t|, m
  std::vector<Vec3> constraint_jacobian;     // -d_t / |d_t|
  Mat3 hessian = Mat3::Zero();               // exact cost Hessian, N^2/m^2
};

/// Fruit centre r_{a,t} in {W}.
inline Vec3 apple_position_world(const TrialSample& sample, const Vec3& grasp_point) {
  return transform_point(sample.pose, grasp_point);
}

/// F = k(|d| - l) d/|d| with d = r_O - r_a. Evaluated as written when |d| < l.
template <typename Scalar>
Vec3T<Scalar> predict_force(const Vec3T<Scalar>& attachment, const Vec3T<Scalar>& fruit, Scalar k, Scalar l) {
  const Vec3T<Scalar> d = attachment - fruit;
  const Scalar rho = d.norm();
  if (!(rho > Scalar(kDegenerateNorm))) {
    throw SingularityError("predict_force: attachment point coincides with fruit position");
  }
  return k * (rho - l) / rho * d;
}

inline Vec3 predict_force(const Vec3& attachment, const Vec3& fruit, const SpringParams& spring) {
  return predict_force<double>(attachment, fruit, spring.k, spring.l);
}

/// dF/dr_O = k[(1 - l/|d|) I + (l/|d|^3) d d^T].
template <typename Scalar>
Mat3T<Scalar> force_jacobian(const Vec3T<Scalar>& attachment, const Vec3T<Scalar>& fruit, Scalar k, Scalar l) {
  const Vec3T<Scalar> d = attachment - fruit;
  const Scalar rho = d.norm();
  if (!(rho > Scalar(kDegenerateNorm))) {
    throw SingularityError("force_jacobian: attachment point coincides with fruit position");
  }
  return k * ((Scalar(1) - l / rho) * Mat3T<Scalar>::Identity() + (l / (rho * rho * rho)) * d * d.transpose());
}

/// Contraction of the second derivative of F with a residual e:
/// sum_i e_i d^2F_i/dr_O^2 = k l [(e d^T + d e^T + (e.d) I)/|d|^3 - 3 (e.d) d d^T/|d|^5].
template <typename Scalar>
Mat3T<Scalar> force_curvature(const Vec3T<Scalar>& attachment, const Vec3T<Scalar>& fruit, Scalar k, Scalar l,
                              const Vec3T<Scalar>& residual) {
  const Vec3T<Scalar> d = attachment - fruit;
  const Scalar rho = d.norm();
  const Scalar rho3 = rho * rho * rho;
  const Scalar ed = residual.dot(d);
  Mat3T<Scalar> m = (residual * d.transpose() + d * residual.transpose()) / rho3;
  m.diagonal().array() += ed / rho3;
  m -= (Scalar(3) * ed / (rho3 * rho * rho)) * d * d.transpose();
  return k * l * m;
}

/// World-frame measured forces, one per sample.
std::vector<Vec3> measured_forces_world(const Trial& trial);

/// Fruit positions in {W}, one per sample.
std::vector<Vec3> fruit_positions_world(const Trial& trial);

/// Precomputed world-frame data for repeated evaluations on one trial.
class TrialModel {
 public:
  explicit TrialModel(const Trial& trial);

  ModelEval evaluate(const Vec3& attachment) const;
  double cost(const Vec3& attachment) const;
  double max_violation(const Vec3& attachment) const;

  std::size_t size() const { return fruit_.size(); }
  const SpringParams& spring() const { return spring_; }
  const std::vector<Vec3>& fruit_positions() const { return fruit_; }
  const std::vector<Vec3>& measured_forces() const { return measured_; }

 private:
  SpringParams spring_;
  std::vector<Vec3> fruit_;
  std::vector<Vec3> measured_;
};

/// MSE between measured and predicted forces, its gradient, and the tension constraints.
ModelEval evaluate(const Vec3& attachment, const Trial& trial);

/// Subtracts the first sample's wrench from every sample.
Trial bias_compensate(const Trial& trial);

}  // namespace peduncle
