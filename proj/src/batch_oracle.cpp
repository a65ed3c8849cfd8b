#include "dynreg/batch_oracle.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dynreg/errors.hpp"

namespace dynreg {

namespace {

Eigen::MatrixXd dense_of(const FrameModel& model) {
  const long n = static_cast<long>(model.input_dim()), m = static_cast<long>(model.output_dim());
  Eigen::MatrixXd a(m, n);
  Vec e = Vec::Zero(n);
  for (long j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.col(j) = model.apply(e);
    e[j] = 0.0;
  }
  return a;
}

bool same_frame(const FrameModel* m0, const Vec& b0, const FrameModel* m1, const Vec& b1) {
  return m0 == m1 && b0.size() == b1.size() && (b0.array() == b1.array()).all();
}

}  // namespace

double frame_objective(const FrameModel& model, const Vec& x, const Vec& b, const Vec& precision_sq,
                       const GradientOperator& K, double alpha, const std::optional<BoxConstraint>& box) {
  if (box && !box->contains(x, 1e-12)) return std::numeric_limits<double>::infinity();
  double q = data_fit(model.apply(x), b, precision_sq);
  if (alpha != 0.0) q += alpha * tv_value(K, x);
  return q;
}

FrameSolution solve_frame(const FrameModel& model, const Vec& b, const Vec& precision_sq, const GradientOperator& K,
                          const std::optional<BoxConstraint>& box, double alpha, const BatchOptions& opt,
                          const Vec& x0, const Field& y0) {
  if (!(opt.tol > 0.0)) throw PreconditionError("batch tolerance must be positive");
  if (alpha < 0.0) throw PreconditionError("alpha must be nonnegative");
  StepParams step = opt.step;
  if (alpha > 0.0) guard_steps(step, K.norm_sq());
  FrameSolution sol;
  Vec x = x0;
  Field y = alpha > 0.0 ? project_dual_ball(DualBall(alpha), y0) : Field(Field::Zero(2, K.n_sites()));
  if (box) x = prox_box(*box, x);
  double best = frame_objective(model, x, b, precision_sq, K, alpha, box);
  Vec best_x = x;
  Field best_y = y;
  double res = std::numeric_limits<double>::infinity();
  long it = 0;
  while (it < opt.max_iter) {
    for (long inner = 0; inner < opt.block && it < opt.max_iter; ++inner, ++it) {
      const DataEval d = model.data_gradient(x, b, precision_sq);
      Vec xn = x - step.tau * d.gradient;
      if (alpha > 0.0) xn -= step.tau * K.adjoint_apply(y);
      if (box) xn = prox_box(*box, xn);
      double dy = 0.0;
      if (alpha > 0.0) {
        Field yn = project_dual_ball(DualBall(alpha), y + step.s * K.apply(2.0 * xn - x));
        dy = (yn - y).norm() / step.s;
        y = std::move(yn);
      }
      res = (xn - x).norm() / step.tau + dy;
      x = std::move(xn);
    }
    const double q = frame_objective(model, x, b, precision_sq, K, alpha, box);
    if (q <= best) {
      best = q;
      best_x = x;
      best_y = y;
    }
    if (!sol.incumbent.empty() && best > sol.incumbent.back())
      throw std::logic_error("batch incumbent objective increased");
    sol.incumbent.push_back(best);
    if (res <= opt.tol) break;
  }
  sol.iterations = it;
  sol.gap = res;
  sol.converged = res <= opt.tol;
  // the final iterate is preferred unless it is measurably worse than the incumbent
  const double q_final = frame_objective(model, x, b, precision_sq, K, alpha, box);
  if (q_final <= best + 1e-12 * (1.0 + std::abs(best))) {
    sol.x = std::move(x);
    sol.y = std::move(y);
    sol.objective = q_final;
  } else {
    sol.x = std::move(best_x);
    sol.y = std::move(best_y);
    sol.objective = best;
  }
  if (opt.require_convergence && !sol.converged)
    throw ConvergenceError("batch frame solve stopped at residual " + std::to_string(res) + " after " +
                           std::to_string(it) + " iterations");
  return sol;
}

const FrameModel& BatchProblem::model(long k) const {
  if (models.empty()) throw PreconditionError("no forward model");
  return *models[models.size() == 1 ? 0 : static_cast<std::size_t>(k)];
}

BatchResult solve_batch(const BatchProblem& p, const Trajectory* warm) {
  if (!p.K) throw PreconditionError("batch problem needs K");
  if (p.horizon < 0 || static_cast<std::size_t>(p.horizon) + 1 > p.data.size())
    throw DimensionError("batch horizon exceeds the data");
  if (warm && warm->size() < static_cast<std::size_t>(p.horizon + 1)) throw DimensionError("warm start too short");
  BatchResult out;
  Vec x = Vec::Constant(p.K->input_dim(), p.box ? 0.5 * (p.box->lower + p.box->upper) : 0.0);
  Field y = Field::Zero(2, p.K->n_sites());
  for (long k = 0; k <= p.horizon; ++k) {
    const FrameModel& m = p.model(k);
    const Vec& b = p.data[static_cast<std::size_t>(k)];
    if (k > 0 && same_frame(&p.model(k - 1), p.data[static_cast<std::size_t>(k - 1)], &m, b)) {
      out.x.push_back(out.x.frames.back());
      out.y.push_back(out.y.back());
      out.frame_objective.push_back(out.frame_objective.back());
      continue;
    }
    if (warm) x = (*warm)[static_cast<std::size_t>(k)];
    FrameSolution s = solve_frame(m, b, p.precision_sq, *p.K, p.box, p.alpha, p.options, x, y);
    out.max_gap = std::max(out.max_gap, s.gap);
    out.total_iterations += s.iterations;
    out.converged = out.converged && s.converged;
    x = s.x;
    y = s.y;
    out.x.push_back(std::move(s.x));
    out.y.push_back(std::move(s.y));
    out.frame_objective.push_back(s.objective);
  }
  for (double q : out.frame_objective) out.objective += q;
  return out;
}

MinRResult min_r_solution(const std::vector<std::shared_ptr<const FrameModel>>& models, const std::vector<Vec>& exact,
                          const Vec& precision_sq, const GradientOperator& K, long horizon, const MinROptions& opt) {
  if (models.empty()) throw PreconditionError("no forward model");
  for (const auto& m : models)
    if (!m->is_linear()) throw UnsupportedError("minimum-R solutions are only available for linear models");
  if (horizon < 0 || static_cast<std::size_t>(horizon) + 1 > exact.size())
    throw DimensionError("horizon exceeds the data");
  auto model = [&](long k) -> const FrameModel& {
    return *models[models.size() == 1 ? 0 : static_cast<std::size_t>(k)];
  };
  BatchOptions inner;
  inner.tol = 1e-12;
  inner.max_iter = opt.iters_per_level;
  inner.block = opt.iters_per_level;
  inner.step = opt.step;
  inner.require_convergence = false;

  MinRResult out;
  out.r_by_level.assign(static_cast<std::size_t>(opt.levels), 0.0);
  const FrameModel* proj_model = nullptr;
  Eigen::LDLT<Eigen::MatrixXd> aat;
  Eigen::MatrixXd a;
  Vec x = Vec::Zero(K.input_dim());
  Field y = Field::Zero(2, K.n_sites());
  double alpha_last = 1.0;
  for (long k = 0; k <= horizon; ++k) {
    const FrameModel& m = model(k);
    const Vec& b = exact[static_cast<std::size_t>(k)];
    if (k > 0 && same_frame(&model(k - 1), exact[static_cast<std::size_t>(k - 1)], &m, b)) {
      out.x.push_back(out.x.frames.back());
      out.y_unit.push_back(out.y_unit.back());
      for (int j = 0; j < opt.levels; ++j) out.r_by_level[static_cast<std::size_t>(j)] += tv_value(K, out.x.frames.back());
      continue;
    }
    for (int j = 0; j < opt.levels; ++j) {
      const double alpha = std::pow(10.0, -0.5 * j);
      FrameSolution s = solve_frame(m, b, precision_sq, K, std::nullopt, alpha, inner, x, y);
      x = std::move(s.x);
      y = std::move(s.y);
      alpha_last = alpha;
      out.r_by_level[static_cast<std::size_t>(j)] += tv_value(K, x);
    }
    Vec xf = x;
    if (opt.project) {
      if (proj_model != &m) {
        a = dense_of(m);
        Eigen::MatrixXd g = a * a.transpose();
        const double ridge = 1e-14 * std::max(1.0, g.trace() / static_cast<double>(g.rows()));
        aat.compute(g);
        if (aat.info() != Eigen::Success || (aat.vectorD().array() <= ridge).any())
          aat.compute(g + ridge * Eigen::MatrixXd::Identity(g.rows(), g.cols()));
        proj_model = &m;
      }
      for (int pass = 0; pass < 2; ++pass) xf += a.transpose() * aat.solve(b - a * xf);
    }
    out.x.push_back(xf);
    out.y_unit.push_back(y / alpha_last);
  }
  for (long k = 0; k <= horizon; ++k) {
    const Vec r = model(k).apply(out.x[static_cast<std::size_t>(k)]) - exact[static_cast<std::size_t>(k)];
    out.residual_max = std::max(out.residual_max, r.norm());
    out.r_value += tv_value(K, out.x[static_cast<std::size_t>(k)]);
  }
  const double limit = out.r_by_level.back();
  out.certified = out.residual_max <= opt.residual_tol && std::abs(out.r_value - limit) <= opt.r_tol * std::max(1.0, limit);
  return out;
}

EResult compute_e(const Trajectory& online, const Trajectory& reference, const BatchProblem& p) {
  if (online.size() != reference.size()) throw DimensionError("trajectories have different horizons");
  if (online.size() > p.data.size()) throw DimensionError("trajectory longer than the data");
  EResult out;
  double cum = 0.0;
  for (std::size_t k = 0; k < online.size(); ++k) {
    const FrameModel& m = p.model(static_cast<long>(k));
    const double qo = frame_objective(m, online[k], p.data[k], p.precision_sq, *p.K, p.alpha);
    const double qr = frame_objective(m, reference[k], p.data[k], p.precision_sq, *p.K, p.alpha);
    out.q_online.push_back(qo);
    out.q_ref.push_back(qr);
    out.increments.push_back(std::max(0.0, qo - qr));
    cum += qo - qr;
    out.e.push_back(std::max(0.0, cum));
  }
  return out;
}

}  // namespace dynreg
