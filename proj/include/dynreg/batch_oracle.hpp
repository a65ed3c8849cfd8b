#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "dynreg/core.hpp"
#include "dynreg/forward_model.hpp"
#include "dynreg/online_solver.hpp"
#include "dynreg/regularisers.hpp"

namespace dynreg {

struct BatchOptions {
  double tol = 1e-8;        // on the fixed-point residual ||dx||/tau + ||dy||/s
  long max_iter = 50000;
  long block = 25;          // inner iterations per outer iteration
  StepParams step{0.05, 256.0};
  bool require_convergence = true;
};

/// l(A x - b) + alpha * TV(x); +inf outside the box when one is given.
double frame_objective(const FrameModel& model, const Vec& x, const Vec& b, const Vec& precision_sq,
                       const GradientOperator& K, double alpha, const std::optional<BoxConstraint>& box = {});

struct FrameSolution {
  Vec x;
  Field y;
  double objective = 0.0;
  double gap = 0.0;  // fixed-point residual at exit
  long iterations = 0;
  bool converged = false;
  std::vector<double> incumbent;  // best objective after each outer iteration
};

/// Primal-dual iterations on one frame. alpha = 0 drops the regulariser.
FrameSolution solve_frame(const FrameModel& model, const Vec& b, const Vec& precision_sq, const GradientOperator& K,
                          const std::optional<BoxConstraint>& box, double alpha, const BatchOptions& opt,
                          const Vec& x0, const Field& y0);

struct BatchProblem {
  std::vector<std::shared_ptr<const FrameModel>> models;  // one per frame or one shared
  std::vector<Vec> data;
  Vec precision_sq;
  std::shared_ptr<const GradientOperator> K;
  std::optional<BoxConstraint> box;
  double alpha = 1.0;
  long horizon = 0;
  BatchOptions options;

  const FrameModel& model(long k) const;
};

struct BatchResult {
  Trajectory x;
  std::vector<Field> y;
  std::vector<double> frame_objective;
  double objective = 0.0;  // Q^N
  double max_gap = 0.0;
  long total_iterations = 0;
  bool converged = true;
};

/// Frames decouple, so each is solved separately; frame k is warm-started from frame k - 1
/// (or from `warm` when given) and identical consecutive frames reuse the previous solution.
BatchResult solve_batch(const BatchProblem& problem, const Trajectory* warm = nullptr);

struct MinROptions {
  int levels = 13;  // alpha_j = 10^(-j/2), j = 0 .. levels - 1
  long iters_per_level = 400;
  StepParams step{0.05, 256.0};
  bool project = true;  // final minimum-norm correction onto {A x = b}
  double residual_tol = 1e-8;
  double r_tol = 1e-6;
};

struct MinRResult {
  Trajectory x;
  std::vector<Field> y_unit;       // final-level duals divided by alpha
  std::vector<double> r_by_level;  // R^N after each continuation level
  double r_value = 0.0;            // R^N at the returned trajectory
  double residual_max = 0.0;       // max_k ||A_k x_k - b_k||
  bool certified = false;
};

/// Penalty continuation with exact data, then a minimum-norm projection onto the constraint.
/// Throws UnsupportedError for nonlinear models.
MinRResult min_r_solution(const std::vector<std::shared_ptr<const FrameModel>>& models, const std::vector<Vec>& exact,
                          const Vec& precision_sq, const GradientOperator& K, long horizon,
                          const MinROptions& opt = {});

struct EResult {
  std::vector<double> increments;  // max{0, Q_k(x_k) - Q_k(xhat_k)}
  std::vector<double> e;           // e^N for every prefix N
  std::vector<double> q_online;    // Q_k(x_k)
  std::vector<double> q_ref;       // Q_k(xhat_k)
};

EResult compute_e(const Trajectory& online, const Trajectory& reference, const BatchProblem& problem);

}  // namespace dynreg
