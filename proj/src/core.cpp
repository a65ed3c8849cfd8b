#include "dynreg/core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dynreg {

void Trajectory::push_back(Vec v) {
  if (!frames.empty() && v.size() != frames.front().size())
    throw DimensionError("trajectory frame has dimension " + std::to_string(v.size()) + ", expected " +
                         std::to_string(frames.front().size()));
  frames.push_back(std::move(v));
}

Trajectory Trajectory::prefix(std::size_t count) const {
  if (count > frames.size()) throw DimensionError("prefix longer than trajectory");
  Trajectory t;
  t.frames.assign(frames.begin(), frames.begin() + static_cast<long>(count));
  return t;
}

void Trajectory::validate() const {
  for (const auto& f : frames)
    if (f.size() != frames.front().size()) throw DimensionError("trajectory frames differ in dimension");
}

double alpha_schedule(double delta) {
  if (!(delta > 1e-10)) throw DomainError("alpha schedule needs delta > 1e-10");
  return 1.0 + std::log10(delta) / 10.0;
}

double RegSchedule::operator()(double delta) const {
  if (!(delta >= delta_min && delta <= delta_max) || delta <= 0.0) {
    std::ostringstream os;
    os << "delta " << delta << " outside schedule range [" << delta_min << ", " << delta_max << "]";
    throw DomainError(os.str());
  }
  switch (rule) {
    case ScheduleRule::log_delta:
      return alpha_schedule(delta);
    case ScheduleRule::constant:
      if (!(constant_alpha > 0)) throw DomainError("constant alpha must be positive");
      return constant_alpha;
    case ScheduleRule::table: {
      if (table.empty()) throw DomainError("empty alpha table");
      auto t = table;
      std::sort(t.begin(), t.end());
      if (delta <= t.front().first) return t.front().second;
      if (delta >= t.back().first) return t.back().second;
      for (std::size_t i = 1; i < t.size(); ++i) {
        if (delta <= t[i].first) {
          double l0 = std::log10(t[i - 1].first), l1 = std::log10(t[i].first);
          double w = (std::log10(delta) - l0) / (l1 - l0);
          return (1 - w) * t[i - 1].second + w * t[i].second;
        }
      }
      return t.back().second;
    }
  }
  return 1.0;
}

double alpha_schedule(const RegSchedule& schedule, double delta) { return schedule(delta); }

double speed_rescale(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("speed_rescale needs t in [0,1]");
  return t + t * t - t * t * t;
}

double speed_rescale_derivative(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("speed_rescale needs t in [0,1]");
  return 1.0 + 2.0 * t - 3.0 * t * t;
}

double rescaled_time(long k, long ramp_frames) {
  if (ramp_frames < 1) throw DomainError("ramp_frames must be >= 1");
  if (k < 0) throw DomainError("frame index must be >= 0");
  return std::min(static_cast<double>(k) / static_cast<double>(ramp_frames), 1.0);
}

void MeasurementStream::validate() const {
  if (exact.empty()) throw PreconditionError("empty measurement stream");
  if (!corrupted.empty() && corrupted.size() != exact.size())
    throw DimensionError("exact and corrupted streams differ in length");
  const auto m = exact.front().size();
  for (std::size_t k = 0; k < exact.size(); ++k) {
    if (exact[k].size() != m) throw DimensionError("measurement frames differ in dimension");
    if (!corrupted.empty() && corrupted[k].size() != m) throw DimensionError("corrupted frame has wrong dimension");
  }
  if (precision.size() != m) throw DimensionError("precision has wrong dimension");
  if ((precision.array() <= 0.0).any()) throw PreconditionError("precision entries must be positive");
}

MeasurementStream generate_noise(const MeasurementStream& stream, const NoiseSpec& spec) {
  if (stream.exact.empty()) throw PreconditionError("cannot add noise to an empty stream");
  MeasurementStream out = stream;
  out.corrupted.clear();
  if (out.precision.size() == 0) out.precision = Vec::Ones(static_cast<long>(stream.measurement_dim()));
  out.validate();
  if (!(spec.delta >= 0.0)) throw DomainError("noise level must be nonnegative");

  const Vec w = out.precision;
  const Vec w2 = w.array().square().matrix();
  const double sd = spec.c_cal * std::sqrt(spec.delta) / w.maxCoeff();
  const double budget2 = spec.c_prime * std::pow(spec.delta, spec.q);
  const auto lo = static_cast<std::uint32_t>(spec.seed & 0xffffffffu);
  const auto hi = static_cast<std::uint32_t>(spec.seed >> 32);

  for (std::size_t k = 0; k < stream.exact.size(); ++k) {
    const auto m = stream.exact[k].size();
    Vec n(m);
    if (sd > 0.0) {
      std::seed_seq seq{lo, hi, static_cast<std::uint32_t>(k), 0x5eedu};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> gauss(0.0, sd);
      for (long i = 0; i < m; ++i) n[i] = gauss(rng);
      const double e1 = (w2.array() * n.array()).matrix().squaredNorm();
      const double e2 = 0.5 * (w.array() * n.array()).matrix().squaredNorm();
      double scale = 1.0;
      if (e1 > spec.delta) scale = std::min(scale, std::sqrt(spec.delta / e1));
      if (e2 > budget2) scale = std::min(scale, std::sqrt(budget2 / e2));
      // shave a few ulps so the inequalities survive rounding
      if (scale < 1.0) scale *= 1.0 - 1e-12;
      n *= scale;
    } else {
      n.setZero();
    }
    out.corrupted.push_back(stream.exact[k] + n);
  }
  return out;
}

}  // namespace dynreg
