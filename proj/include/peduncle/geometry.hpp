#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "peduncle/errors.hpp"

namespace peduncle {

template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

/// Unit quaternion, scalar-first (w, x, y, z). Normalized on construction.
template <typename Scalar>
class UnitQuaternionT {
 public:
  UnitQuaternionT() : q_(Eigen::Quaternion<Scalar>::Identity()) {}

  UnitQuaternionT(Scalar w, Scalar x, Scalar y, Scalar z) : q_(w, x, y, z) {
    const Scalar n = q_.norm();
    if (!(n > Scalar(0)) || !std::isfinite(n)) {
      throw DegenerateInputError("quaternion has zero or non-finite norm");
    }
    q_.coeffs() /= n;
  }

  explicit UnitQuaternionT(const Eigen::Quaternion<Scalar>& q)
      : UnitQuaternionT(q.w(), q.x(), q.y(), q.z()) {}

  static UnitQuaternionT identity() { return {}; }

  /// Takes coefficients that are already unit norm (within 1e-12) without rescaling.
  static UnitQuaternionT from_normalized(Scalar w, Scalar x, Scalar y, Scalar z) {
    UnitQuaternionT out;
    out.q_ = Eigen::Quaternion<Scalar>(w, x, y, z);
    if (std::abs(out.q_.norm() - Scalar(1)) > Scalar(1e-12)) {
      throw DegenerateInputError("from_normalized: quaternion is not unit norm");
    }
    return out;
  }

  static UnitQuaternionT from_axis_angle(const Vec3T<Scalar>& axis, Scalar angle) {
    return UnitQuaternionT(Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, axis.normalized())));
  }

  Scalar w() const { return q_.w(); }
  Scalar x() const { return q_.x(); }
  Scalar y() const { return q_.y(); }
  Scalar z() const { return q_.z(); }

  const Eigen::Quaternion<Scalar>& quaternion() const { return q_; }
  Mat3T<Scalar> matrix() const { return q_.toRotationMatrix(); }

  Vec3T<Scalar> rotate(const Vec3T<Scalar>& v) const { return q_ * v; }

  UnitQuaternionT conjugate() const {
    UnitQuaternionT out;
    out.q_ = q_.conjugate();
    return out;
  }

  friend UnitQuaternionT operator*(const UnitQuaternionT& a, const UnitQuaternionT& b) {
    return UnitQuaternionT(a.q_ * b.q_);
  }

  friend bool operator==(const UnitQuaternionT& a, const UnitQuaternionT& b) {
    return a.q_.coeffs() == b.q_.coeffs();
  }

 private:
  Eigen::Quaternion<Scalar> q_;
};

/// Pose of frame {S} in frame {W}: p_W = R p_S + t.
template <typename Scalar>
struct RigidTransformT {
  UnitQuaternionT<Scalar> rotation;
  Vec3T<Scalar> translation = Vec3T<Scalar>::Zero();

  static RigidTransformT identity() { return {}; }

  friend bool operator==(const RigidTransformT& a, const RigidTransformT& b) {
    return a.rotation == b.rotation && a.translation == b.translation;
  }
};

enum class Frame { Sensor, World };

template <typename Scalar>
struct WrenchT {
  Vec3T<Scalar> force = Vec3T<Scalar>::Zero();
  Vec3T<Scalar> torque = Vec3T<Scalar>::Zero();
  Frame frame = Frame::Sensor;

  friend bool operator==(const WrenchT& a, const WrenchT& b) {
    return a.force == b.force && a.torque == b.torque && a.frame == b.frame;
  }
};

using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;
using UnitQuaternion = UnitQuaternionT<double>;
using RigidTransform = RigidTransformT<double>;
using Wrench = WrenchT<double>;

template <typename Scalar>
Vec3T<Scalar> transform_point(const RigidTransformT<Scalar>& T, const Vec3T<Scalar>& p) {
  return T.rotation.rotate(p) + T.translation;
}

/// a ∘ b: applies b first, then a.
template <typename Scalar>
RigidTransformT<Scalar> compose(const RigidTransformT<Scalar>& a, const RigidTransformT<Scalar>& b) {
  return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

template <typename Scalar>
RigidTransformT<Scalar> inverse(const RigidTransformT<Scalar>& T) {
  const auto r_inv = T.rotation.conjugate();
  return {r_inv, -r_inv.rotate(T.translation)};
}

/// Maps a sensor-frame wrench into {W} with the wrench adjoint of T = {W}<-{S}:
/// f_W = R f_S, tau_W = R tau_S + t x (R f_S).
template <typename Scalar>
WrenchT<Scalar> adjoint_wrench_to_world(const RigidTransformT<Scalar>& T, const WrenchT<Scalar>& w) {
  if (w.frame != Frame::Sensor) {
    throw FrameMismatchError("adjoint_wrench_to_world expects a sensor-frame wrench");
  }
  WrenchT<Scalar> out;
  out.force = T.rotation.rotate(w.force);
  out.torque = T.rotation.rotate(w.torque) + T.translation.cross(out.force);
  out.frame = Frame::World;
  return out;
}

/// Inverse of adjoint_wrench_to_world.
template <typename Scalar>
WrenchT<Scalar> adjoint_wrench_to_sensor(const RigidTransformT<Scalar>& T, const WrenchT<Scalar>& w) {
  if (w.frame != Frame::World) {
    throw FrameMismatchError("adjoint_wrench_to_sensor expects a world-frame wrench");
  }
  const auto r_inv = T.rotation.conjugate();
  WrenchT<Scalar> out;
  out.force = r_inv.rotate(w.force);
  out.torque = r_inv.rotate(w.torque - T.translation.cross(w.force));
  out.frame = Frame::Sensor;
  return out;
}

inline constexpr double kDegenerateNorm = 1e-12;

/// Angle between two vectors in degrees, in [0, 180].
/// atan2(|r1 x r2|, r1 . r2) keeps obtuse angles well defined.
template <typename Scalar>
Scalar angle_between(const Vec3T<Scalar>& r1, const Vec3T<Scalar>& r2) {
  if (r1.norm() < Scalar(kDegenerateNorm) || r2.norm() < Scalar(kDegenerateNorm)) {
    throw DegenerateInputError("angle_between: vector norm below 1e-12");
  }
  const Scalar rad = std::atan2(r1.cross(r2).norm(), r1.dot(r2));
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

template <typename Scalar>
bool all_finite(const Vec3T<Scalar>& v) {
  return v.allFinite();
}

}  // namespace peduncle
