#include "dynreg/online_solver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dynreg/errors.hpp"
#include "dynreg/forward_eit.hpp"

namespace dynreg {

double guard_steps(StepParams& step, double k_norm_sq) {
  if (!(step.tau > 0.0) || !(step.s > 0.0)) throw PreconditionError("step sizes must be positive");
  const double prod = step.tau * step.s * k_norm_sq;
  if (prod < 1.0) return 1.0;
  const double f = 0.9 / prod;
  step.s *= f;
  return f;
}

Displacement predictor_displacement(const PredictorSpec& spec, const SolverState& state, const FrameGeometry& geo,
                                    const MotionHint* hint) {
  Displacement d;
  d.at_unknowns = Eigen::Matrix2Xd::Zero(2, geo.unknown_positions().cols());
  d.at_sites = Eigen::Matrix2Xd::Zero(2, geo.site_positions().cols());
  switch (spec.primal) {
    case PrimalPredictor::zero_motion:
      break;
    case PrimalPredictor::known_flow_translation:
      if (hint == nullptr) throw PreconditionError("known_flow_translation needs motion metadata");
      d.at_unknowns = hint->displacement_at(geo.unknown_positions());
      d.at_sites = hint->displacement_at(geo.site_positions());
      break;
    case PrimalPredictor::optical_flow: {
      if (state.x_prev.size() != state.x.size()) break;  // needs two frames
      const long n = spec.flow_raster;
      const Eigen::Matrix2Xd flow =
          horn_schunck(geo.rasterise(state.x_prev, n), geo.rasterise(state.x, n), n, spec.flow);
      const Vec u = flow.row(0).transpose(), v = flow.row(1).transpose();
      auto sample = [&](const Eigen::Matrix2Xd& pts) {
        Eigen::Matrix2Xd out(2, pts.cols());
        for (long i = 0; i < pts.cols(); ++i) {
          out(0, i) = bilinear(u, n, pts.col(i));
          out(1, i) = bilinear(v, n, pts.col(i));
        }
        return out;
      };
      d.at_unknowns = sample(geo.unknown_positions());
      d.at_sites = sample(geo.site_positions());
      break;
    }
  }
  return d;
}

Vec predict_primal(const PredictorSpec& spec, const SolverState& state, const FrameGeometry& geo,
                   const MotionHint* hint) {
  if (spec.primal == PrimalPredictor::zero_motion) return state.x;
  const Displacement d = predictor_displacement(spec, state, geo, hint);
  if (d.at_unknowns.isZero(0.0)) return state.x;
  return warp_primal(geo, state.x, d.at_unknowns);
}

Field predict_dual(const PredictorSpec& spec, const SolverState& state, const FrameGeometry& geo,
                   const MotionHint* hint) {
  switch (spec.dual) {
    case DualPredictor::identity:
      return state.y;
    case DualPredictor::zero:
      return Field::Zero(2, state.y.cols());
    case DualPredictor::affine_scaling: {
      if (state.y.isZero(0.0)) return state.y;
      const Displacement d = predictor_displacement(spec, state, geo, hint);
      const Field warped = d.at_sites.isZero(0.0) ? state.y : warp_dual(geo, state.y, d.at_sites);
      return project_dual_ball(DualBall(state.alpha), warped);
    }
  }
  throw std::logic_error("unknown dual predictor");
}

CorrectorOutput corrector_step(const Vec& x_pred, const Field& y_pred, const FrameModel& model, const Vec& b,
                               const Vec& precision_sq, const GradientOperator& K, const BoxConstraint& box,
                               double alpha, const StepParams& step) {
  CorrectorOutput out;
  out.data = model.data_gradient(x_pred, b, precision_sq);
  out.x = prox_box(box, x_pred - step.tau * (out.data.gradient + K.adjoint_apply(y_pred)), step.tau);
  out.y = project_dual_ball(DualBall(alpha), y_pred + step.s * K.apply(2.0 * out.x - x_pred));
  return out;
}

const FrameModel& OnlineProblem::model(long k) const {
  if (models.empty()) throw PreconditionError("no forward model");
  return *models[models.size() == 1 ? 0 : static_cast<std::size_t>(k)];
}

OnlineSolver::OnlineSolver(const OnlineProblem& problem) : p_(problem) {
  if (!p_.K) throw PreconditionError("online problem needs K");
  const bool needs_geometry =
      p_.predictor.primal != PrimalPredictor::zero_motion || p_.predictor.dual == DualPredictor::affine_scaling;
  if (needs_geometry && !p_.geometry) throw PreconditionError("this predictor needs frame geometry");
  if (p_.x_init.size() != p_.K->input_dim()) throw DimensionError("initial guess has the wrong size");
  state_.x = p_.x_init;
  state_.y = Field::Zero(2, p_.K->n_sites());
  state_.alpha = p_.alpha;
  state_.step = p_.step;
  rescale_ = guard_steps(state_.step, p_.K->norm_sq());
}

FrameLog OnlineSolver::advance() {
  const long k = state_.k + 1;
  if (static_cast<std::size_t>(k) >= p_.data.size()) throw PreconditionError("no data for frame " + std::to_string(k));
  const MotionHint* hint = static_cast<std::size_t>(k) < p_.hints.size() ? &p_.hints[static_cast<std::size_t>(k)] : nullptr;
  MotionHint still;
  if (k == 0 && hint == nullptr) hint = &still;
  Vec x_pred = state_.x;
  Field y_pred = state_.y;
  if (k > 0 && p_.geometry) {
    x_pred = predict_primal(p_.predictor, state_, *p_.geometry, hint);
    y_pred = predict_dual(p_.predictor, state_, *p_.geometry, hint);
  } else if (k > 0 && p_.predictor.dual == DualPredictor::zero) {
    y_pred.setZero();
  }

  const FrameModel& model = p_.model(k);
  const auto* eit = dynamic_cast<const EitFrameModel*>(&model);
  const long f0 = eit ? eit->forward_solves() : 0, a0 = eit ? eit->adjoint_solves() : 0;
  CorrectorOutput c = corrector_step(x_pred, y_pred, model, p_.data[static_cast<std::size_t>(k)], p_.precision_sq,
                                     *p_.K, p_.box, p_.alpha, state_.step);
  FrameLog log;
  log.k = k;
  log.data_fit = c.data.value;
  log.forward_solves = eit ? eit->forward_solves() - f0 : 1;
  log.adjoint_solves = eit ? eit->adjoint_solves() - a0 : 1;

  if (!p_.box.contains(c.x)) throw std::logic_error("primal iterate left the box at frame " + std::to_string(k));
  if (!DualBall(p_.alpha).contains(c.y, 1e-12))
    throw std::logic_error("dual iterate left the ball at frame " + std::to_string(k));

  state_.x_prev = std::move(state_.x);
  state_.x = std::move(c.x);
  state_.y = std::move(c.y);
  state_.k = k;
  return log;
}

OnlineResult run_online(const OnlineProblem& problem, long horizon) {
  if (horizon < 0) throw PreconditionError("horizon must be nonnegative");
  OnlineSolver solver(problem);
  OnlineResult out;
  out.step = solver.step();
  out.step_rescale = solver.step_rescale();
  for (long k = 0; k <= horizon; ++k) {
    out.log.push_back(solver.advance());
    out.x.push_back(solver.state().x);
    out.y.push_back(solver.state().y);
  }
  return out;
}

}  // namespace dynreg
