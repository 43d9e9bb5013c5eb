#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "peduncle/spring_model.hpp"

namespace peduncle {

using Rng = std::mt19937_64;

struct Box {
  Vec3 min = Vec3(0.4, -0.3, 0.2);
  Vec3 max = Vec3(0.8, 0.3, 0.6);
  friend bool operator==(const Box&, const Box&) = default;
};

/// Synthetic proxy-orchard pull. The hand approaches with its palm normal n,
/// grasps the fruit, and retreats along -n at constant speed. The stem leaves
/// the fruit at off_axis_deg from n, so pulls are rarely straight along it.
struct SimConfig {
  double k = 632.0;              // N/m
  double l = 0.10;               // m
  double pull_distance = 0.15;   // m
  double pull_speed = 0.09;      // m/s
  double sample_rate = 500.0;    // Hz
  double force_cap = 5.0;        // N
  double noise_sigma = 0.1;      // N per axis
  Mat3 grasp_compliance = Mat3::Zero();  // m/N, used by generate_trial
  double compliance_min = 1e-3;  // m/N, principal compliances of Failure trials
  double compliance_max = 4e-3;
  Vec3 grasp_point = Vec3(0.0, 0.0, 0.12);  // fruit centre in {S}, m
  double off_axis_min_deg = 60.0;
  double off_axis_max_deg = 90.0;
  Box attachment_region;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct SimTrialRecord {
  Trial trial;
  Vec3 true_pull_direction = Vec3::Zero();  // unit, {W}
  Vec3 stem_direction = Vec3::Zero();       // unit, fruit toward attachment at t = 0
  UnitQuaternion orientation;
  bool compliance_applied = false;
};

/// Palm normal (sensor z-axis) area-uniform on the quarter sphere z >= 0,
/// azimuth in [-90, 90] degrees about +x; roll about the normal uniform.
UnitQuaternion sample_orientation(Rng& rng);

/// Elevation and azimuth (degrees) of the palm normal of q.
struct PalmAngles {
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
};
PalmAngles palm_angles(const UnitQuaternion& q);

/// Closed-form pull length until a rigid pull at off_axis_deg reaches force_cap.
double pull_length_to_cap(double k, double l, double force_cap, double off_axis_deg);

SimTrialRecord generate_trial(const SimConfig& config, Rng& rng);

/// Per-index generator; a corpus is reproducible from (config.seed, index) alone.
Rng trial_rng(std::uint64_t seed, std::uint64_t index);

/// Random symmetric PSD compliance with principal values in [cmin, cmax].
Mat3 sample_compliance(Rng& rng, double cmin, double cmax);

std::vector<SimTrialRecord> generate_corpus(const SimConfig& config, int n_trials, double failure_fraction);

}  // namespace peduncle
