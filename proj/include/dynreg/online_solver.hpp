#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "dynreg/core.hpp"
#include "dynreg/forward_model.hpp"
#include "dynreg/geometry.hpp"
#include "dynreg/regularisers.hpp"
#include "dynreg/scenario.hpp"

namespace dynreg {

enum class PrimalPredictor { zero_motion, known_flow_translation, optical_flow };
enum class DualPredictor { identity, zero, affine_scaling };

struct PredictorSpec {
  PrimalPredictor primal = PrimalPredictor::known_flow_translation;
  DualPredictor dual = DualPredictor::affine_scaling;
  FlowParams flow;
  long flow_raster = 32;
};

struct StepParams {
  double tau = 0.0053;  // primal
  double s = 10.0;      // dual
};

/// Rescales s so that tau * s * ||K||^2 <= 0.9 when the guard tau * s * ||K||^2 < 1 fails.
/// Returns the factor applied to s (1 when untouched).
double guard_steps(StepParams& step, double k_norm_sq);

struct SolverState {
  long k = -1;    // frame of the current iterates, -1 before the first frame
  Vec x;          // x_k, or the initial guess when k = -1
  Vec x_prev;     // x_{k-1}, empty when unavailable
  Field y;        // y_k
  double alpha = 1.0;
  StepParams step;
};

/// Displacement (at unknowns, at dual sites) carried from frame k to k + 1.
struct Displacement {
  Eigen::Matrix2Xd at_unknowns;
  Eigen::Matrix2Xd at_sites;
};

Displacement predictor_displacement(const PredictorSpec& spec, const SolverState& state, const FrameGeometry& geo,
                                    const MotionHint* hint);
Vec predict_primal(const PredictorSpec& spec, const SolverState& state, const FrameGeometry& geo,
                   const MotionHint* hint);
Field predict_dual(const PredictorSpec& spec, const SolverState& state, const FrameGeometry& geo,
                   const MotionHint* hint);

struct CorrectorOutput {
  Vec x;
  Field y;
  DataEval data;  // evaluated at the prediction
};

/// One forward-backward primal step at the prediction followed by an over-relaxed dual step.
CorrectorOutput corrector_step(const Vec& x_pred, const Field& y_pred, const FrameModel& model, const Vec& b,
                               const Vec& precision_sq, const GradientOperator& K, const BoxConstraint& box,
                               double alpha, const StepParams& step);

struct OnlineProblem {
  std::vector<std::shared_ptr<const FrameModel>> models;  // one per frame, or one shared by all frames
  std::vector<Vec> data;                                  // corrupted data, at least horizon + 1 frames
  Vec precision_sq;
  std::shared_ptr<const GradientOperator> K;
  std::shared_ptr<const FrameGeometry> geometry;
  std::vector<MotionHint> hints;  // hints[k]: motion from frame k - 1 to frame k
  BoxConstraint box;
  double alpha = 1.0;
  StepParams step;
  PredictorSpec predictor;
  Vec x_init;

  const FrameModel& model(long k) const;
};

struct FrameLog {
  long k = 0;
  double data_fit = 0.0;  // at the corrected iterate's prediction point
  long forward_solves = 0;
  long adjoint_solves = 0;
};

/// Frame-by-frame driver: each call to advance() consumes one frame and never touches
/// earlier iterates.
class OnlineSolver {
 public:
  explicit OnlineSolver(const OnlineProblem& problem);
  const SolverState& state() const { return state_; }
  const StepParams& step() const { return state_.step; }
  double step_rescale() const { return rescale_; }
  FrameLog advance();

 private:
  const OnlineProblem& p_;
  SolverState state_;
  double rescale_ = 1.0;
};

struct OnlineResult {
  Trajectory x;
  std::vector<Field> y;
  std::vector<FrameLog> log;
  StepParams step;
  double step_rescale = 1.0;
};

OnlineResult run_online(const OnlineProblem& problem, long horizon);

}  // namespace dynreg
