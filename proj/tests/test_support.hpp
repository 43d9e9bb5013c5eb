#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "peduncle/geometry.hpp"
#include "peduncle/spring_model.hpp"

namespace peduncle::testing {

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline UnitQuaternion random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return UnitQuaternion(n(rng), n(rng), n(rng), n(rng));
}

inline RigidTransform random_transform(std::mt19937_64& rng) {
  return {random_rotation(rng), random_vec(rng, 2.0)};
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("peduncle_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Trial whose sensor wrenches are exactly the spring force at `attachment`
/// (rigid grasp, no noise). The hand retreats along `pull` from rest.
inline Trial exact_trial(const Vec3& attachment, const Vec3& stem, const Vec3& pull, const UnitQuaternion& rotation,
                         int n = 60, double step = 1e-3, SpringParams spring = {}) {
  Trial trial;
  trial.id = "exact";
  trial.spring = spring;
  trial.grasp_point = Vec3(0.0, 0.0, 0.1);
  trial.ground_truth = attachment;
  const Vec3 fruit0 = attachment - spring.l * stem.normalized();
  const Vec3 sensor0 = fruit0 - rotation.rotate(trial.grasp_point);
  for (int i = 0; i < n; ++i) {
    TrialSample s;
    s.t = 0.002 * i;
    s.pose = {rotation, sensor0 + (step * i) * pull.normalized()};
    const Vec3 fruit = transform_point(s.pose, trial.grasp_point);
    const Vec3 force = predict_force(attachment, fruit, spring);
    s.wrench = {rotation.conjugate().rotate(force), Vec3::Zero(), Frame::Sensor};
    trial.samples.push_back(s);
  }
  return trial;
}

}  // namespace peduncle::testing
