#include "peduncle/spring_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace peduncle {

void SpringParams::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw ValidationError("spring stiffness k must be positive");
  if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("spring resting length l must be positive");
}

const char* to_string(Label label) {
  return label == Label::Success ? "success" : "failure";
}

Label label_from_string(const std::string& s) {
  if (s == "success") return Label::Success;
  if (s == "failure") return Label::Failure;
  throw ValidationError("unknown label '" + s + "'");
}

void Trial::validate() const {
  spring.validate();
  if (samples.size() < 2) {
    throw ValidationError("trial '" + id + "' needs at least 2 samples, has " + std::to_string(samples.size()));
  }
  if (!grasp_point.allFinite()) throw ValidationError("trial '" + id + "': grasp_point not finite");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto where = "trial '" + id + "' sample " + std::to_string(i);
    if (!std::isfinite(s.t)) throw ValidationError(where + ": timestamp not finite");
    if (i > 0 && !(s.t > samples[i - 1].t)) throw ValidationError(where + ": timestamps not strictly increasing");
    if (!s.pose.translation.allFinite()) throw ValidationError(where + ": pose translation not finite");
    if (!s.wrench.force.allFinite() || !s.wrench.torque.allFinite()) {
      throw ValidationError(where + ": wrench not finite");
    }
    if (s.wrench.frame != Frame::Sensor) throw ValidationError(where + ": wrench must be in the sensor frame");
  }
  if (ground_truth) {
    const double dist = (*ground_truth - apple_position_world(samples.front(), grasp_point)).norm();
    if (!std::isfinite(dist) || !(dist > 0.0)) {
      throw ValidationError("trial '" + id + "': ground truth must be finite and distinct from the initial fruit position");
    }
  }
}

std::vector<Vec3> measured_forces_world(const Trial& trial) {
  std::vector<Vec3> out;
  out.reserve(trial.samples.size());
  for (const auto& s : trial.samples) out.push_back(adjoint_wrench_to_world(s.pose, s.wrench).force);
  return out;
}

std::vector<Vec3> fruit_positions_world(const Trial& trial) {
  std::vector<Vec3> out;
  out.reserve(trial.samples.size());
  for (const auto& s : trial.samples) out.push_back(apple_position_world(s, trial.grasp_point));
  return out;
}

TrialModel::TrialModel(const Trial& trial)
    : spring_(trial.spring), fruit_(fruit_positions_world(trial)), measured_(measured_forces_world(trial)) {}

ModelEval TrialModel::evaluate(const Vec3& attachment) const {
  const std::size_t n = fruit_.size();
  const double k = spring_.k;
  const double l = spring_.l;
  ModelEval out;
  out.constraint_values.reserve(n);
  out.constraint_jacobian.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Vec3 d = attachment - fruit_[t];
    const double rho = d.norm();
    if (!(rho > kDegenerateNorm)) {
      throw SingularityError("evaluate: candidate attachment coincides with fruit position at sample " +
                             std::to_string(t));
    }
    const Vec3 residual = predict_force<double>(attachment, fruit_[t], k, l) - measured_[t];
    const Mat3 jac = force_jacobian<double>(attachment, fruit_[t], k, l);
    out.cost += residual.squaredNorm();
    out.gradient += jac * residual;  // J is symmetric
    out.hessian += jac * jac + force_curvature<double>(attachment, fruit_[t], k, l, residual);
    out.constraint_values.push_back(l - rho);
    out.constraint_jacobian.push_back(-d / rho);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.cost *= inv_n;
  out.gradient *= 2.0 * inv_n;
  out.hessian *= 2.0 * inv_n;
  return out;
}

double TrialModel::cost(const Vec3& attachment) const {
  double sum = 0.0;
  for (std::size_t t = 0; t < fruit_.size(); ++t) {
    sum += (predict_force<double>(attachment, fruit_[t], spring_.k, spring_.l) - measured_[t]).squaredNorm();
  }
  return sum / static_cast<double>(fruit_.size());
}

double TrialModel::max_violation(const Vec3& attachment) const {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& r : fruit_) worst = std::max(worst, spring_.l - (attachment - r).norm());
  return worst;
}

ModelEval evaluate(const Vec3& attachment, const Trial& trial) {
  return TrialModel(trial).evaluate(attachment);
}

Trial bias_compensate(const Trial& trial) {
  Trial out = trial;
  if (out.samples.empty()) return out;
  const Vec3 f0 = trial.samples.front().wrench.force;
  const Vec3 tau0 = trial.samples.front().wrench.torque;
  for (auto& s : out.samples) {
    s.wrench.force -= f0;
    s.wrench.torque -= tau0;
  }
  return out;
}

}  // namespace peduncle
