#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynreg/core.hpp"
#include "dynreg/online_solver.hpp"
#include "dynreg/scenario.hpp"

namespace dynreg {

enum class Mode { linear, eit };

struct LinearSettings {
  long grid = 32;
  double precision = 4.0;  // uniform diagonal of Sigma^{-1/2}
  double blur_sigma = 0.5;
  long blur_size = 5;
};

struct EitSettings {
  int rings = 8;
  int electrodes = 16;
  double coverage = 0.5;
  double zeta = 0.01;
  double precision = 80.0;  // tau * W^2 * ||J(background)||^2 close to 1 at the default tau
};

struct RunConfig {
  Mode mode = Mode::linear;
  ScenarioSpec scenario = ScenarioSpec::two_inclusions(201, 140);
  std::vector<double> deltas{0.1, 0.05, 0.01, 0.005};
  long frames = 200;  // horizon N
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  NoiseSpec noise;  // delta and seed are overridden per level
  RegSchedule schedule;
  PredictorSpec predictor;
  StepParams step{0.05, 256.0};
  double box_lower = 0.5;
  double box_upper = 3.0;
  double eta = 0.4;
  bool run_batch = true;  // linear mode: also solve the per-level batch problem
  LinearSettings linear;
  EitSettings eit;

  static RunConfig linear_default();
  static RunConfig eit_default();
  void validate() const;
};

/// JSON configuration; unknown keys are rejected.  Schema in docs/config.md.
RunConfig parse_config(const std::string& json_text, const RunConfig& base);
RunConfig load_config(const std::string& path, const RunConfig& base);

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);
PrimalPredictor primal_from_string(const std::string& s);
DualPredictor dual_from_string(const std::string& s);

}  // namespace dynreg
