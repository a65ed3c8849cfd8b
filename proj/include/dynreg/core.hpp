#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dynreg/errors.hpp"

namespace dynreg {

using Vec = Eigen::VectorXd;

/// Time-indexed frames x_0..x_N sharing one dimension.
struct Trajectory {
  std::vector<Vec> frames;

  Trajectory() = default;
  explicit Trajectory(std::vector<Vec> f) : frames(std::move(f)) { validate(); }

  std::size_t size() const { return frames.size(); }
  std::size_t frame_dim() const { return frames.empty() ? 0 : static_cast<std::size_t>(frames.front().size()); }
  long horizon() const { return static_cast<long>(frames.size()) - 1; }
  const Vec& operator[](std::size_t k) const { return frames[k]; }
  Vec& operator[](std::size_t k) { return frames[k]; }
  void push_back(Vec v);
  Trajectory prefix(std::size_t count) const;
  void validate() const;
};

struct NoiseSpec {
  double delta = 0.1;
  double q = 1.0;
  double c_prime = 1.0;
  std::uint64_t seed = 0;
  double c_cal = 1.0;  // multiplies the per-entry standard deviation before projection
};

enum class ScheduleRule { log_delta, constant, table };

struct RegSchedule {
  ScheduleRule rule = ScheduleRule::log_delta;
  double constant_alpha = 1.0;
  std::vector<std::pair<double, double>> table;  // (delta, alpha), interpolated in log10(delta)
  double delta_min = 1e-10;
  double delta_max = 1.0;

  double operator()(double delta) const;
};

/// alpha = 1 + log10(delta)/10, defined for delta > 1e-10.
double alpha_schedule(double delta);
double alpha_schedule(const RegSchedule& schedule, double delta);

/// s(t) = t + t^2 - t^3 on [0, 1].
double speed_rescale(double t);
double speed_rescale_derivative(double t);

double rescaled_time(long k, long ramp_frames);

/// Exact and corrupted per-frame measurements; precision holds the diagonal of Sigma^{-1/2}.
struct MeasurementStream {
  std::vector<Vec> exact;
  std::vector<Vec> corrupted;
  Vec precision;

  std::size_t frames() const { return exact.size(); }
  std::size_t measurement_dim() const { return exact.empty() ? 0 : static_cast<std::size_t>(exact.front().size()); }
  Vec precision_sq() const { return precision.array().square().matrix(); }
  void validate() const;
};

/// Draws Gaussian noise per frame and projects each frame's realisation so that
/// ||W^2 n_k||^2 <= delta and 0.5 ||W n_k||^2 <= C' delta^q.  Frame k uses its
/// own RNG stream seeded by (seed, k), so prefixes do not depend on the horizon.
MeasurementStream generate_noise(const MeasurementStream& stream, const NoiseSpec& spec);

}  // namespace dynreg
