#include <gtest/gtest.h>

#include <numbers>

#include "peduncle/geometry.hpp"
#include "test_support.hpp"

using namespace peduncle;
using peduncle::testing::random_transform;
using peduncle::testing::random_vec;

namespace {

const UnitQuaternion kQuarterTurnZ = UnitQuaternion::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2);

void expect_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x(), b.x(), tol);
  EXPECT_NEAR(a.y(), b.y(), tol);
  EXPECT_NEAR(a.z(), b.z(), tol);
}

}  // namespace

TEST(TransformPoint, Identity) {
  expect_near(transform_point(RigidTransform::identity(), Vec3(1, 2, 3)), Vec3(1, 2, 3), 0.0);
}

TEST(TransformPoint, TranslationOnly) {
  const RigidTransform T{UnitQuaternion::identity(), Vec3(0, 0, 0.5)};
  expect_near(transform_point(T, Vec3(Vec3::Zero())), Vec3(0, 0, 0.5), 0.0);
}

TEST(TransformPoint, QuarterTurnAboutZ) {
  const RigidTransform T{kQuarterTurnZ, Vec3::Zero()};
  expect_near(transform_point(T, Vec3(1, 0, 0)), Vec3(0, 1, 0), 1e-15);
}

TEST(UnitQuaternion, NormalizedOnConstruction) {
  const UnitQuaternion q(2.0, 0.0, 0.0, 2.0);
  EXPECT_NEAR(q.quaternion().norm(), 1.0, 1e-9);
  EXPECT_THROW(UnitQuaternion(0, 0, 0, 0), DegenerateInputError);
}

TEST(Adjoint, IdentityKeepsWrench) {
  const Wrench w{Vec3(1, -2, 3), Vec3(0.1, 0.2, -0.3), Frame::Sensor};
  const Wrench out = adjoint_wrench_to_world(RigidTransform::identity(), w);
  EXPECT_EQ(out.frame, Frame::World);
  expect_near(out.force, w.force, 0.0);
  expect_near(out.torque, w.torque, 0.0);
}

TEST(Adjoint, TranslationAddsMomentArm) {
  // t x f = (1,0,0) x (0,0,1) = (0,-1,0)
  const RigidTransform T{UnitQuaternion::identity(), Vec3(1, 0, 0)};
  const Wrench out = adjoint_wrench_to_world(T, {Vec3(0, 0, 1), Vec3::Zero(), Frame::Sensor});
  expect_near(out.force, Vec3(0, 0, 1), 0.0);
  expect_near(out.torque, Vec3(0, -1, 0), 0.0);
}

TEST(Adjoint, RotationTurnsForce) {
  const RigidTransform T{kQuarterTurnZ, Vec3::Zero()};
  const Wrench out = adjoint_wrench_to_world(T, {Vec3(1, 0, 0), Vec3::Zero(), Frame::Sensor});
  expect_near(out.force, Vec3(0, 1, 0), 1e-15);
  expect_near(out.torque, Vec3::Zero(), 1e-15);
}

TEST(Adjoint, RejectsWrongFrame) {
  const Wrench world{Vec3(1, 0, 0), Vec3::Zero(), Frame::World};
  EXPECT_THROW(adjoint_wrench_to_world(RigidTransform::identity(), world), FrameMismatchError);
  const Wrench sensor{Vec3(1, 0, 0), Vec3::Zero(), Frame::Sensor};
  EXPECT_THROW(adjoint_wrench_to_sensor(RigidTransform::identity(), sensor), FrameMismatchError);
}

TEST(AngleBetween, Fixtures) {
  EXPECT_DOUBLE_EQ(angle_between<double>(Vec3(1, 0, 0), Vec3(1, 0, 0)), 0.0);
  EXPECT_DOUBLE_EQ(angle_between<double>(Vec3(1, 0, 0), Vec3(0, 1, 0)), 90.0);
  EXPECT_NEAR(angle_between<double>(Vec3(1, 0, 0), Vec3(1, 1, 0)), 45.0, 1e-12);
}

TEST(AngleBetween, ObtuseDoesNotWrap) {
  EXPECT_NEAR(angle_between<double>(Vec3(1, 0, 0), Vec3(-1, 1, 0)), 135.0, 1e-12);
}

TEST(AngleBetween, RejectsDegenerate) {
  EXPECT_THROW(angle_between<double>(Vec3::Zero(), Vec3(1, 0, 0)), DegenerateInputError);
  EXPECT_THROW(angle_between<double>(Vec3(1, 0, 0), Vec3(1e-13, 0, 0)), DegenerateInputError);
}

TEST(AngleBetween, WorksForFloat) {
  EXPECT_NEAR(angle_between<float>(Vec3T<float>(1, 0, 0), Vec3T<float>(0, 0, 1)), 90.0f, 1e-5f);
}

// Properties over random inputs.

TEST(GeometryProperties, ComposeWithInverseIsIdentity) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform T = random_transform(rng);
    const RigidTransform I = compose(T, inverse(T));
    const Vec3 p = random_vec(rng);
    expect_near(transform_point(I, p), p, 1e-9);
    EXPECT_NEAR(std::abs(I.rotation.w()), 1.0, 1e-9);
    expect_near(I.translation, Vec3::Zero(), 1e-9);
  }
}

TEST(GeometryProperties, ComposeMatchesSequentialTransform) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform a = random_transform(rng);
    const RigidTransform b = random_transform(rng);
    const Vec3 p = random_vec(rng);
    expect_near(transform_point(compose(a, b), p), transform_point(a, transform_point(b, p)), 1e-9);
  }
}

TEST(GeometryProperties, AdjointPreservesForceMagnitudeAndInverts) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform T = random_transform(rng);
    const Wrench w{random_vec(rng, 10.0), random_vec(rng), Frame::Sensor};
    const Wrench world = adjoint_wrench_to_world(T, w);
    EXPECT_NEAR(world.force.norm(), w.force.norm(), 1e-9);
    const Wrench back = adjoint_wrench_to_sensor(T, world);
    expect_near(back.force, w.force, 1e-9);
    expect_near(back.torque, w.torque, 1e-9);
  }
}

TEST(GeometryProperties, AngleSymmetricAndScaleInvariant) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = random_vec(rng);
    const Vec3 b = random_vec(rng);
    const double ab = angle_between<double>(a, b);
    EXPECT_NEAR(ab, angle_between<double>(b, a), 1e-9);
    EXPECT_NEAR(ab, angle_between<double>(Vec3(scale(rng) * a), Vec3(scale(rng) * b)), 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 180.0);
    EXPECT_NEAR(angle_between<double>(a, Vec3(-a)), 180.0, 1e-9);
  }
}
