#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dynreg/core.hpp"

namespace dynreg {

/// One inclusion moving on a circle around the origin of the unit disk.
struct InclusionSpec {
  double orbit_radius = 0.5;
  double start_angle = 0.0;
  double sweep = 6.283185307179586;  // angle travelled while s goes from 0 to 1
  double radius = 0.15;
  double value = 2.0;
  double absent_from = 0.25;  // rescaled time s at which the inclusion vanishes
  double absent_until = 0.75;
};

struct ScenarioSpec {
  long ramp_frames = 140;
  long total_frames = 201;  // number of frames, i.e. horizon N + 1
  double background = 1.0;
  double domain_radius = 1.0;
  std::vector<InclusionSpec> inclusions;

  /// Two inclusions, the first absent on s in [1/4, 3/4), the second on [2/4, 3/4).
  static ScenarioSpec two_inclusions(long total_frames, long ramp_frames);
  void validate() const;
};

struct InclusionState {
  Eigen::Vector2d center;
  double radius = 0.0;
  double value = 0.0;
  bool present = false;
};

double motion_parameter(const ScenarioSpec& spec, long k);
std::vector<InclusionState> scenario_state(const ScenarioSpec& spec, long k);
Vec sample_phantom(const ScenarioSpec& spec, long k, const Eigen::Matrix2Xd& positions);

/// Exact displacement between two frames, expressed as translated windows.
struct MotionHint {
  struct Window {
    Eigen::Vector2d center;  // inclusion centre in the target frame
    double radius = 0.0;
    Eigen::Vector2d displacement;
  };
  std::vector<Window> windows;

  Eigen::Vector2d displacement_at(const Eigen::Vector2d& p) const;
  Eigen::Matrix2Xd displacement_at(const Eigen::Matrix2Xd& pts) const;
};

MotionHint motion_between(const ScenarioSpec& spec, long k_from, long k_to);

}  // namespace dynreg
