#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "peduncle/simulator.hpp"
#include "peduncle/solver.hpp"

using namespace peduncle;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SimConfig noiseless() {
  SimConfig c;
  c.noise_sigma = 0.0;
  return c;
}

}  // namespace

TEST(SampleOrientation, AreaUniformElevation) {
  Rng rng(2024);
  const int n = 10000;
  std::vector<double> elevation(n);
  for (auto& e : elevation) e = palm_angles(sample_orientation(rng)).elevation_deg;
  for (double probe : {15.0, 30.0, 60.0}) {
    const double frac =
        static_cast<double>(std::count_if(elevation.begin(), elevation.end(), [&](double e) { return e < probe; })) / n;
    EXPECT_NEAR(frac, std::sin(probe * kDeg), 0.02) << "probe " << probe;
  }
}

TEST(SampleOrientation, StaysOnQuarterSphere) {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const UnitQuaternion q = sample_orientation(rng);
    const Vec3 n = q.rotate(Vec3::UnitZ());
    EXPECT_GE(n.z(), 0.0);
    EXPECT_GE(n.x(), -1e-12);
    const PalmAngles a = palm_angles(q);
    EXPECT_GE(a.azimuth_deg, -90.0 - 1e-9);
    EXPECT_LE(a.azimuth_deg, 90.0 + 1e-9);
    EXPECT_NEAR(q.quaternion().norm(), 1.0, 1e-9);
  }
}

TEST(PullLength, KinematicFixtures) {
  // Straight pull: elongation 5/632 m; 0.024 s at 0.33 m/s.
  const double straight = pull_length_to_cap(632.0, 0.1, 5.0, 0.0);
  EXPECT_NEAR(straight, 5.0 / 632.0, 1e-15);
  EXPECT_NEAR(straight / 0.33, 0.024, 5e-4);
  // At the default speed every pull at least 60 degrees off-axis takes >= 0.1 s.
  const SimConfig c;
  for (double deg = 60.0; deg <= 90.0; deg += 5.0) EXPECT_GE(pull_length_to_cap(632.0, 0.1, 5.0, deg) / c.pull_speed, 0.1);
}

TEST(GenerateTrial, PerpendicularPullGivesAbout226Samples) {
  SimConfig c = noiseless();
  c.off_axis_min_deg = c.off_axis_max_deg = 90.0;
  Rng rng = trial_rng(1, 0);
  const auto rec = generate_trial(c, rng);
  const double expected = pull_length_to_cap(c.k, c.l, c.force_cap, 90.0) / c.pull_speed * c.sample_rate;
  EXPECT_NEAR(static_cast<double>(rec.trial.samples.size()), expected, 1.0);
  EXPECT_NEAR(static_cast<double>(rec.trial.samples.size()), 226.0, 5.0);
}

TEST(GenerateTrial, NoiselessWrenchesMatchModel) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = trial_rng(seed, 3);
    const auto rec = generate_trial(noiseless(), rng);
    const Trial& t = rec.trial;
    ASSERT_TRUE(t.ground_truth);
    EXPECT_NO_THROW(t.validate());
    const auto measured = measured_forces_world(t);
    const auto fruit = fruit_positions_world(t);
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
      const Vec3 model = predict_force(*t.ground_truth, fruit[i], t.spring);
      EXPECT_LT((measured[i] - model).norm(), 1e-9);
      EXPECT_LE(measured[i].norm(), SimConfig{}.force_cap);
      EXPECT_EQ(t.samples[i].wrench.frame, Frame::Sensor);
    }
    EXPECT_NEAR((*t.ground_truth - fruit.front()).norm(), t.spring.l, 1e-9);
    EXPECT_LT(measured.front().norm(), 1e-12);
    // The sample after the last recorded one would reach the cap.
    const Vec3 step = fruit.back() - fruit[fruit.size() - 2];
    EXPECT_GE(predict_force(*t.ground_truth, Vec3(fruit.back() + step), t.spring).norm(), SimConfig{}.force_cap);
  }
}

TEST(GenerateTrial, NoiselessFitRecoversAttachment) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = trial_rng(seed, 5);
    const auto rec = generate_trial(noiseless(), rng);
    EXPECT_LT((fit(rec.trial).attachment - *rec.trial.ground_truth).norm(), 1e-4);
  }
}

TEST(GenerateTrial, PullsAlongNegativePalmNormal) {
  Rng rng = trial_rng(9, 0);
  const auto rec = generate_trial(noiseless(), rng);
  EXPECT_LT((rec.true_pull_direction + rec.orientation.rotate(Vec3::UnitZ())).norm(), 1e-12);
  const auto& s = rec.trial.samples;
  const Vec3 moved = s.back().pose.translation - s.front().pose.translation;
  EXPECT_LT((moved.normalized() - rec.true_pull_direction).norm(), 1e-9);
  const double off_axis = angle_between<double>(rec.stem_direction, rec.orientation.rotate(Vec3::UnitZ()));
  EXPECT_GE(off_axis, 60.0 - 1e-9);
  EXPECT_LE(off_axis, 90.0 + 1e-9);
}

TEST(GenerateTrial, ComplianceMakesModelViolationReal) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SimConfig c = noiseless();
    Rng rng = trial_rng(seed, 0);
    c.grasp_compliance = sample_compliance(rng, c.compliance_min, c.compliance_max);
    const auto rec = generate_trial(c, rng);
    EXPECT_TRUE(rec.compliance_applied);
    EXPECT_GT(evaluate(*rec.trial.ground_truth, rec.trial).cost, 0.0);
  }
}

TEST(GenerateTrial, RejectsUnreachableCap) {
  SimConfig c;
  c.pull_distance = 0.001;
  Rng rng(1);
  EXPECT_THROW(generate_trial(c, rng), ConfigError);

  SimConfig bad;
  bad.grasp_compliance(0, 1) = 1e-3;  // asymmetric
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.noise_sigma = -1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SampleCompliance, SymmetricWithinRange) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const Mat3 C = sample_compliance(rng, 1e-3, 4e-3);
    EXPECT_LT((C - C.transpose()).cwiseAbs().maxCoeff(), 1e-18);
    const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(C).eigenvalues();
    EXPECT_GE(ev.minCoeff(), 1e-3 - 1e-12);
    EXPECT_LE(ev.maxCoeff(), 4e-3 + 1e-12);
  }
}

TEST(GenerateCorpus, LabelCounts) {
  const auto all_success = generate_corpus(SimConfig{}, 70, 0.0);
  ASSERT_EQ(all_success.size(), 70u);
  for (const auto& r : all_success) {
    EXPECT_EQ(r.trial.label, Label::Success);
    EXPECT_FALSE(r.compliance_applied);
  }

  const auto mixed = generate_corpus(SimConfig{}, 105, 1.0 / 3.0);
  ASSERT_EQ(mixed.size(), 105u);
  int failures = 0;
  for (const auto& r : mixed) {
    if (r.trial.label == Label::Failure) {
      ++failures;
      EXPECT_TRUE(r.compliance_applied);
    } else {
      EXPECT_FALSE(r.compliance_applied);
    }
  }
  EXPECT_EQ(failures, 35);
  EXPECT_EQ(mixed.front().trial.id, "trial_000");
  EXPECT_EQ(mixed.back().trial.id, "trial_104");
}

TEST(GenerateCorpus, DeterministicForSeed) {
  SimConfig c;
  c.seed = 42;
  const auto a = generate_corpus(c, 12, 0.25);
  const auto b = generate_corpus(c, 12, 0.25);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].trial.samples.size(), b[i].trial.samples.size());
    EXPECT_EQ(a[i].trial.label, b[i].trial.label);
    EXPECT_EQ(*a[i].trial.ground_truth, *b[i].trial.ground_truth);
    for (std::size_t j = 0; j < a[i].trial.samples.size(); ++j) {
      EXPECT_EQ(a[i].trial.samples[j].wrench.force, b[i].trial.samples[j].wrench.force);
      EXPECT_EQ(a[i].trial.samples[j].pose.translation, b[i].trial.samples[j].pose.translation);
    }
  }
  c.seed = 43;
  EXPECT_NE(*generate_corpus(c, 1, 0.0).front().trial.ground_truth, *a.front().trial.ground_truth);
}

TEST(GenerateCorpus, PrefixStableAcrossCorpusSize) {
  const auto small = generate_corpus(SimConfig{}, 5, 0.0);
  const auto large = generate_corpus(SimConfig{}, 20, 0.0);
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(*small[i].trial.ground_truth, *large[i].trial.ground_truth);
}

TEST(GenerateCorpus, RejectsBadFraction) {
  EXPECT_THROW(generate_corpus(SimConfig{}, 10, 1.5), ConfigError);
  EXPECT_THROW(generate_corpus(SimConfig{}, 10, -0.1), ConfigError);
}
