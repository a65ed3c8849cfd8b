#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dynreg/batch_oracle.hpp"
#include "dynreg/config.hpp"
#include "dynreg/diagnostics.hpp"
#include "dynreg/forward_eit.hpp"
#include "dynreg/geometry.hpp"
#include "dynreg/online_solver.hpp"

namespace dynreg {

struct ScenarioBuild {
  Trajectory truth;
  std::vector<MotionHint> hints;  // hints[k]: motion from frame k - 1 to frame k
};

ScenarioBuild build_scenario(const ScenarioSpec& spec, const Eigen::Matrix2Xd& positions, long horizon);

/// Everything shared by the noise levels of one experiment.
struct Setup {
  RunConfig cfg;
  std::shared_ptr<const FrameGeometry> geometry;
  std::shared_ptr<const GradientOperator> K;
  std::shared_ptr<const FrameModel> model;
  std::shared_ptr<const CemSystem> cem;  // EIT mode only
  ScenarioBuild scenario;
  MeasurementStream exact;  // exact data and precision; corrupted left empty
  Vec x_init;
  BoxConstraint box;
  double spacing = 1.0;  // pixel spacing of the TV scaling (linear mode)
};

Setup make_setup(const RunConfig& cfg);

/// Minimum-R solution, subgradient selection and source witnesses (linear mode).
struct Reference {
  MinRResult minr;
  std::vector<Vec> v;  // A^T w per frame
  std::vector<double> w_norm_sq;
  double max_witness_residual = 0.0;
  bool ridge_used = false;
};

Reference linear_reference(const Setup& setup);

struct LevelResult {
  double delta = 0.0;
  double alpha = 0.0;
  MeasurementStream stream;
  OnlineResult online;
  std::vector<double> cum_err;
  std::vector<double> data_fit;  // l(A x_k - b_k)
  std::vector<double> reg_value;  // TV(x_k)
  bool has_theory = false;
  RunRecord record;
  NoiseCheck noise;
  std::optional<QuadraticBound> quad;
  LinearisationStats lin;
  std::vector<double> bregman;  // per frame
  PrefixSeries theorem;
  std::optional<BoundConstReport> dconst;
  std::optional<BatchResult> batch;
  double gamma = 0.0, gamma_radius = 0.0;
  std::vector<double> epsilon;  // cumulative growth slack; run_experiment redoes it with the common factor
  long max_forward_solves = 0, max_adjoint_solves = 0, min_forward_solves = 0, min_adjoint_solves = 0;
};

LevelResult run_level(const Setup& setup, const Reference* ref, double delta);

/// Fixed column order; header row included.
void write_level_csv(const LevelResult& level, std::ostream& os);
/// Cumulative averaged squared error vs frame, one curve per level, log-scale y.
void write_svg(const std::vector<LevelResult>& levels, std::ostream& os);

struct ExperimentResult {
  std::vector<LevelResult> levels;
  std::vector<VerdictLine> verdicts;
  std::optional<LimitTable> limits;
  bool pass = true;
};

/// Runs every noise level, evaluates the checks and (if write) fills cfg.out_dir with
/// level_<delta>.csv, verdicts.csv, limits.csv (linear) and fig2.svg.
ExperimentResult run_experiment(const RunConfig& cfg, bool write = true);

/// Terminal cumulative error strictly decreasing as delta decreases.
bool terminal_error_decreasing(const std::vector<LevelResult>& levels);

std::string delta_tag(double delta);

}  // namespace dynreg
