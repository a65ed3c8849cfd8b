#include "dynreg/scenario.hpp"

#include <cmath>
#include <limits>

namespace dynreg {

ScenarioSpec ScenarioSpec::two_inclusions(long total_frames, long ramp_frames) {
  ScenarioSpec s;
  s.total_frames = total_frames;
  s.ramp_frames = ramp_frames;
  const double pi = 3.141592653589793;
  InclusionSpec a;
  a.orbit_radius = 0.5;
  a.start_angle = 0.0;
  a.sweep = 2.0 * pi;
  a.absent_from = 0.25;
  a.absent_until = 0.75;
  InclusionSpec b = a;
  b.start_angle = pi;
  b.sweep = 1.5 * pi;  // slower, so the two never overlap
  b.absent_from = 0.5;
  b.absent_until = 0.75;
  s.inclusions = {a, b};
  return s;
}

void ScenarioSpec::validate() const {
  if (ramp_frames < 1) throw PreconditionError("ramp_frames must be >= 1");
  if (total_frames < ramp_frames) throw PreconditionError("total_frames must be >= ramp_frames");
  if (!(domain_radius > 0)) throw PreconditionError("domain radius must be positive");
  for (const auto& inc : inclusions) {
    if (!(inc.radius > 0)) throw PreconditionError("inclusion radius must be positive");
    if (inc.orbit_radius + inc.radius > domain_radius) throw PreconditionError("inclusion leaves the domain");
    if (inc.absent_from < 0 || inc.absent_from > 1 || inc.absent_until < 0 || inc.absent_until > 1)
      throw PreconditionError("rescaled disappearance indices must lie in [0,1]");
  }
}

double motion_parameter(const ScenarioSpec& spec, long k) {
  return speed_rescale(rescaled_time(k, spec.ramp_frames));
}

std::vector<InclusionState> scenario_state(const ScenarioSpec& spec, long k) {
  const double s = motion_parameter(spec, k);
  std::vector<InclusionState> out;
  for (const auto& inc : spec.inclusions) {
    InclusionState st;
    const double th = inc.start_angle + inc.sweep * s;
    st.center = inc.orbit_radius * Eigen::Vector2d(std::cos(th), std::sin(th));
    st.radius = inc.radius * spec.domain_radius;
    st.value = inc.value;
    st.present = !(s >= inc.absent_from && s < inc.absent_until);
    out.push_back(st);
  }
  return out;
}

Vec sample_phantom(const ScenarioSpec& spec, long k, const Eigen::Matrix2Xd& positions) {
  const auto states = scenario_state(spec, k);
  Vec v = Vec::Constant(positions.cols(), spec.background);
  for (long i = 0; i < positions.cols(); ++i) {
    for (const auto& st : states) {
      if (st.present && (positions.col(i) - st.center).norm() <= st.radius) v[i] = st.value;
    }
  }
  return v;
}

Eigen::Vector2d MotionHint::displacement_at(const Eigen::Vector2d& p) const {
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  for (const auto& w : windows) {
    const double r = (p - w.center).norm();
    if (r <= w.radius && r < best) {
      best = r;
      d = w.displacement;
    }
  }
  return d;
}

Eigen::Matrix2Xd MotionHint::displacement_at(const Eigen::Matrix2Xd& pts) const {
  Eigen::Matrix2Xd d(2, pts.cols());
  for (long i = 0; i < pts.cols(); ++i) d.col(i) = displacement_at(Eigen::Vector2d(pts.col(i)));
  return d;
}

MotionHint motion_between(const ScenarioSpec& spec, long k_from, long k_to) {
  const auto a = scenario_state(spec, k_from);
  const auto b = scenario_state(spec, k_to);
  MotionHint hint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!b[i].present) continue;
    MotionHint::Window w;
    w.center = b[i].center;
    w.displacement = b[i].center - a[i].center;
    // wide enough to cover both the old and the new disk plus a margin of one radius
    w.radius = 2.0 * b[i].radius + w.displacement.norm();
    hint.windows.push_back(w);
  }
  return hint;
}

}  // namespace dynreg
