#include "peduncle/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace peduncle {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Any unit vector orthogonal to n.
Vec3 orthogonal_unit(const Vec3& n) {
  const Vec3 ref = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return ref.cross(n).normalized();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_symmetric_psd(const Mat3& C) {
  if (!C.allFinite() || (C - C.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  return Eigen::SelfAdjointEigenSolver<Mat3>(C).eigenvalues().minCoeff() >= -1e-15;
}

// Grasp point in {S} once the fingers have yielded to the spring force:
// r = r0 + C R^T F(r_O, p + R r), solved by Newton's method.
Vec3 compliant_grasp_point(const Vec3& r0, const Vec3& guess, const Mat3& C, const RigidTransform& pose,
                           const Vec3& attachment, const SpringParams& spring) {
  const Mat3 R = pose.rotation.matrix();
  Vec3 r = guess;
  Vec3 force_prev = Vec3::Constant(std::numeric_limits<double>::infinity());
  for (int it = 0; it < 100; ++it) {
    const Vec3 fruit = transform_point(pose, r);
    const Vec3 F = predict_force(attachment, fruit, spring);
    if ((F - force_prev).norm() < 1e-9) break;
    force_prev = F;
    const Vec3 residual = r - r0 - C * R.transpose() * F;
    const Mat3 jac = Mat3::Identity() + C * R.transpose() * force_jacobian<double>(attachment, fruit, spring.k, spring.l) * R;
    r -= jac.lu().solve(residual);
  }
  return r;
}

}  // namespace

void SimConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(k, "k");
  positive(l, "l");
  positive(pull_distance, "pull_distance");
  positive(pull_speed, "pull_speed");
  positive(sample_rate, "sample_rate");
  positive(force_cap, "force_cap");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!is_symmetric_psd(grasp_compliance)) throw ConfigError("grasp_compliance must be symmetric PSD");
  if (!(compliance_min >= 0.0) || !(compliance_max >= compliance_min)) {
    throw ConfigError("compliance range must satisfy 0 <= min <= max");
  }
  if (!(off_axis_min_deg >= 0.0) || !(off_axis_max_deg <= 90.0) || off_axis_min_deg > off_axis_max_deg) {
    throw ConfigError("off-axis range must lie within [0, 90] degrees");
  }
  if (!(attachment_region.min.array() <= attachment_region.max.array()).all()) {
    throw ConfigError("attachment_region min must not exceed max");
  }
  if (!grasp_point.allFinite()) throw ConfigError("grasp_point must be finite");
  // The least favourable pull (most off-axis) must still reach the cap.
  const double cos_a = std::cos(off_axis_max_deg * kDeg);
  const double reach = std::sqrt(l * l + pull_distance * pull_distance + 2.0 * l * pull_distance * cos_a);
  if (k * (reach - l) < force_cap) {
    throw ConfigError("pull_distance too short to reach force_cap");
  }
}

UnitQuaternion sample_orientation(Rng& rng) {
  const double elevation = std::asin(uniform(rng, 0.0, 1.0));
  const double azimuth = uniform(rng, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
  const double roll = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const Vec3 normal(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                    std::sin(elevation));
  const Vec3 x0 = orthogonal_unit(normal);
  const Vec3 x_axis = Eigen::AngleAxisd(roll, normal) * x0;
  Mat3 R;
  R.col(0) = x_axis;
  R.col(1) = normal.cross(x_axis);
  R.col(2) = normal;
  return UnitQuaternion(Eigen::Quaterniond(R));
}

PalmAngles palm_angles(const UnitQuaternion& q) {
  const Vec3 n = q.rotate(Vec3::UnitZ());
  return {std::asin(std::clamp(n.z(), -1.0, 1.0)) / kDeg, std::atan2(n.y(), n.x()) / kDeg};
}

double pull_length_to_cap(double k, double l, double force_cap, double off_axis_deg) {
  const double target = l + force_cap / k;
  const double a = off_axis_deg * kDeg;
  return -l * std::cos(a) + std::sqrt(target * target - l * l * std::sin(a) * std::sin(a));
}

Rng trial_rng(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1)));
}

Mat3 sample_compliance(Rng& rng, double cmin, double cmax) {
  Eigen::Quaterniond q(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
                       std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng));
  q.normalize();
  const Mat3 Q = q.toRotationMatrix();
  const Vec3 c(uniform(rng, cmin, cmax), uniform(rng, cmin, cmax), uniform(rng, cmin, cmax));
  const Mat3 C = Q * c.asDiagonal() * Q.transpose();
  return 0.5 * (C + C.transpose());
}

SimTrialRecord generate_trial(const SimConfig& config, Rng& rng) {
  config.validate();
  const SpringParams spring{config.k, config.l};

  const Vec3 attachment(uniform(rng, config.attachment_region.min.x(), config.attachment_region.max.x()),
                        uniform(rng, config.attachment_region.min.y(), config.attachment_region.max.y()),
                        uniform(rng, config.attachment_region.min.z(), config.attachment_region.max.z()));
  const UnitQuaternion orientation = sample_orientation(rng);
  const Vec3 normal = orientation.rotate(Vec3::UnitZ());

  const double off_axis = uniform(rng, config.off_axis_min_deg, config.off_axis_max_deg) * kDeg;
  const double spin = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const Vec3 perp = Eigen::AngleAxisd(spin, normal) * orthogonal_unit(normal);
  const Vec3 stem = (std::cos(off_axis) * normal + std::sin(off_axis) * perp).normalized();

  const Vec3 fruit0 = attachment - config.l * stem;
  const Vec3 sensor0 = fruit0 - orientation.rotate(config.grasp_point);
  const Vec3 pull = -normal;

  const bool compliant = !config.grasp_compliance.isZero(0.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  SimTrialRecord record;
  record.orientation = orientation;
  record.true_pull_direction = pull;
  record.stem_direction = stem;
  record.compliance_applied = compliant;
  Trial& trial = record.trial;
  trial.spring = spring;
  trial.grasp_point = config.grasp_point;
  trial.ground_truth = attachment;

  const double dt = 1.0 / config.sample_rate;
  Vec3 grasp = config.grasp_point;
  bool reached = false;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double travelled = config.pull_speed * t;
    if (travelled > config.pull_distance) break;

    TrialSample sample;
    sample.t = t;
    sample.pose.rotation = orientation;
    sample.pose.translation = sensor0 + travelled * pull;
    if (compliant) {
      grasp = compliant_grasp_point(config.grasp_point, grasp, config.grasp_compliance, sample.pose, attachment, spring);
    }
    const Vec3 force_world = predict_force(attachment, transform_point(sample.pose, grasp), spring);
    if (force_world.norm() >= config.force_cap) {
      reached = true;
      break;
    }
    // Contact force acts at the fruit, so the sensor also reads its moment.
    Wrench world{force_world, Vec3::Zero(), Frame::World};
    world.torque = transform_point(sample.pose, grasp).cross(force_world);
    Wrench sensor = adjoint_wrench_to_sensor(sample.pose, world);
    for (int axis = 0; axis < 3; ++axis) sensor.force(axis) += config.noise_sigma * noise(rng);
    sample.wrench = sensor;
    trial.samples.push_back(sample);
  }
  if (!reached || trial.samples.size() < 2) {
    throw ConfigError("pull never reached force_cap within pull_distance");
  }
  return record;
}

std::vector<SimTrialRecord> generate_corpus(const SimConfig& config, int n_trials, double failure_fraction) {
  config.validate();
  if (n_trials < 0) throw ConfigError("n_trials must be >= 0");
  if (!(failure_fraction >= 0.0 && failure_fraction <= 1.0)) {
    throw ConfigError("failure_fraction must lie in [0, 1]");
  }
  const auto n = static_cast<std::size_t>(n_trials);
  const auto n_fail = static_cast<std::size_t>(std::llround(failure_fraction * static_cast<double>(n_trials)));

  std::vector<Label> labels(n, Label::Success);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_fail), Label::Failure);
  Rng label_rng = trial_rng(config.seed, ~0ULL);
  std::shuffle(labels.begin(), labels.end(), label_rng);

  std::vector<SimTrialRecord> corpus;
  corpus.reserve(n);
  const int width = std::max<int>(3, static_cast<int>(std::to_string(n).size()));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = trial_rng(config.seed, i);
    SimConfig trial_config = config;
    trial_config.grasp_compliance = labels[i] == Label::Failure
                                        ? sample_compliance(rng, config.compliance_min, config.compliance_max)
                                        : Mat3::Zero();
    SimTrialRecord record = generate_trial(trial_config, rng);
    std::string digits = std::to_string(i);
    record.trial.id = "trial_" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(digits.size(), width), '0') + digits;
    record.trial.label = labels[i];
    corpus.push_back(std::move(record));
  }
  return corpus;
}

}  // namespace peduncle
