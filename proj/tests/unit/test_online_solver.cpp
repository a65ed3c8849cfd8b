#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "dynreg/batch_oracle.hpp"
#include "dynreg/forward_eit.hpp"
#include "dynreg/forward_linear.hpp"
#include "dynreg/online_solver.hpp"

using namespace dynreg;

namespace {

Vec bump(const GridGeometry& geo, const Eigen::Vector2d& c, double width) {
  const auto& p = geo.unknown_positions();
  Vec x(p.cols());
  for (long i = 0; i < p.cols(); ++i) x[i] = 1.0 + std::exp(-(p.col(i) - c).squaredNorm() / width);
  return x;
}

struct SmallLinear {
  long n = 6;
  std::shared_ptr<const GridGeometry> geo = std::make_shared<GridGeometry>(n);
  std::shared_ptr<const GradientOperator> K = std::make_shared<GridGradient>(GridGradient::square(n));
  std::shared_ptr<const FrameModel> A =
      std::make_shared<LinearFrameOperator>(LinearFrameOperator::gaussian_blur(n, n, 0.5, 3));
  Vec w2 = Vec::Constant(n * n, 4.0);
  Vec truth = bump(*geo, Eigen::Vector2d(0.2, -0.1), 0.3);
  Vec b = A->apply(truth);

  OnlineProblem problem(long frames, double alpha) const {
    OnlineProblem p;
    p.models = {A};
    p.data.assign(static_cast<std::size_t>(frames), b);
    p.precision_sq = w2;
    p.K = K;
    p.geometry = geo;
    p.box = BoxConstraint(0.5, 3.0);
    p.alpha = alpha;
    p.step = {0.05, 256.0};
    p.predictor.primal = PrimalPredictor::zero_motion;
    p.predictor.dual = DualPredictor::identity;
    p.x_init = Vec::Ones(n * n);
    return p;
  }
};

}  // namespace

TEST_CASE("step guard") {
  StepParams s{0.1, 20.0};
  CHECK(guard_steps(s, 0.4) == 1.0);
  CHECK(s.s == 20.0);
  const double f = guard_steps(s, 1.0);
  CHECK(f == doctest::Approx(0.45));
  CHECK(s.tau * s.s * 1.0 == doctest::Approx(0.9));
  StepParams bad{0.0, 1.0};
  CHECK_THROWS_AS(guard_steps(bad, 1.0), PreconditionError);
}

TEST_CASE("primal predictors") {
  const long n = 64;
  const GridGeometry geo(n);
  const Eigen::Vector2d c(0.1, 0.2), d(0.05, -0.03);
  SolverState st;
  st.x = bump(geo, c, 0.02);
  st.y = Field::Zero(2, n * n);

  PredictorSpec zero;
  zero.primal = PrimalPredictor::zero_motion;
  CHECK(predict_primal(zero, st, geo, nullptr) == st.x);

  PredictorSpec known;
  known.primal = PrimalPredictor::known_flow_translation;
  CHECK_THROWS_AS(predict_primal(known, st, geo, nullptr), PreconditionError);
  const MotionHint still;
  CHECK(predict_primal(known, st, geo, &still) == st.x);

  // smooth bump translated by the exact flow: bilinear error <= h^2/8 (|f_xx| + |f_yy|), |f_xx| <= 2/width
  MotionHint hint;
  hint.windows.push_back({c + d, 0.9, d});
  const Vec pred = predict_primal(known, st, geo, &hint);
  const Vec next = bump(geo, c + d, 0.02);
  const double h = 2.0 / n;
  CHECK((pred - next).cwiseAbs().maxCoeff() <= h * h / 8.0 * (4.0 / 0.02));

  // constants are fixed by every predictor
  SolverState flat;
  flat.x = Vec::Constant(n * n, 1.7);
  flat.x_prev = flat.x;
  flat.y = Field::Zero(2, n * n);
  PredictorSpec flow;
  flow.primal = PrimalPredictor::optical_flow;
  for (const auto* spec : {&zero, &known, &flow})
    CHECK((predict_primal(*spec, flat, geo, &hint) - flat.x).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("optical flow follows a translation") {
  const long n = 32;
  const GridGeometry geo(n);
  SolverState st;
  st.x_prev = bump(geo, Eigen::Vector2d(0.0, 0.0), 0.1);
  st.x = bump(geo, Eigen::Vector2d(0.04, 0.0), 0.1);
  PredictorSpec spec;
  spec.primal = PrimalPredictor::optical_flow;
  spec.flow.sweeps = 200;
  const Displacement disp = predictor_displacement(spec, st, geo, nullptr);
  // flow at the centre of the bump points along +x
  const long centre = (n / 2) * n + n / 2;
  CHECK(disp.at_unknowns(0, centre) > 0.01);
  CHECK(std::abs(disp.at_unknowns(1, centre)) < 0.5 * disp.at_unknowns(0, centre));
}

TEST_CASE("dual predictors") {
  const long n = 16;
  const GridGeometry geo(n);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 3.0);
  MotionHint hint;
  hint.windows.push_back({Eigen::Vector2d(0.2, 0.0), 0.5, Eigen::Vector2d(0.1, 0.05)});

  SolverState st;
  st.alpha = 0.7;
  st.x = Vec::Ones(n * n);
  st.y = Field::Zero(2, n * n);
  for (auto d : {DualPredictor::identity, DualPredictor::zero, DualPredictor::affine_scaling}) {
    PredictorSpec spec;
    spec.dual = d;
    CHECK(predict_dual(spec, st, geo, &hint).norm() == 0.0);
  }

  PredictorSpec aff;
  aff.dual = DualPredictor::affine_scaling;
  for (int t = 0; t < 20; ++t) {
    for (long i = 0; i < st.y.size(); ++i) st.y.data()[i] = g(rng);
    CHECK(DualBall(st.alpha).contains(predict_dual(aff, st, geo, &hint), 1e-12));
  }
  PredictorSpec id;
  id.dual = DualPredictor::identity;
  st.y = project_dual_ball(DualBall(st.alpha), st.y);
  CHECK(predict_dual(id, st, geo, &hint) == st.y);
  CHECK(DualBall(st.alpha).contains(predict_dual(id, st, geo, &hint)));
}

TEST_CASE("corrector step fixes the per-frame minimiser") {
  const SmallLinear s;
  BatchOptions opt;
  opt.tol = 1e-13;
  opt.max_iter = 200000;
  const double alpha = 0.8;
  const BoxConstraint box(0.5, 3.0);
  const FrameSolution sol =
      solve_frame(*s.A, s.b, s.w2, *s.K, box, alpha, opt, Vec::Ones(s.n * s.n), Field::Zero(2, s.n * s.n));
  REQUIRE(sol.converged);
  StepParams step = opt.step;
  guard_steps(step, s.K->norm_sq());
  const CorrectorOutput c = corrector_step(sol.x, sol.y, *s.A, s.b, s.w2, *s.K, box, alpha, step);
  CHECK((c.x - sol.x).norm() <= 1e-10);
  CHECK((c.y - sol.y).norm() <= 1e-10);
}

TEST_CASE("stationary data: online iterates reach the batch minimiser") {
  const SmallLinear s;
  const double alpha = 0.8;
  const OnlineProblem p = s.problem(4000, alpha);
  const OnlineResult r = run_online(p, 3999);

  BatchOptions opt;
  opt.tol = 1e-13;
  opt.max_iter = 200000;
  const FrameSolution sol =
      solve_frame(*s.A, s.b, s.w2, *s.K, p.box, alpha, opt, Vec::Ones(s.n * s.n), Field::Zero(2, s.n * s.n));
  CHECK((r.x[3999] - sol.x).norm() <= 1e-6);
  // and the distance shrinks along the way
  CHECK((r.x[3999] - sol.x).norm() < (r.x[100] - sol.x).norm());
}

TEST_CASE("horizon zero is one predict and correct") {
  const SmallLinear s;
  const OnlineProblem p = s.problem(5, 0.8);
  const OnlineResult r = run_online(p, 0);
  REQUIRE(r.x.size() == 1);
  StepParams step = p.step;
  guard_steps(step, s.K->norm_sq());
  const CorrectorOutput c =
      corrector_step(p.x_init, Field::Zero(2, s.n * s.n), *s.A, s.b, s.w2, *s.K, p.box, p.alpha, step);
  CHECK(r.x[0] == c.x);
  CHECK(r.y[0] == c.y);
}

TEST_CASE("prefix immutability") {
  const SmallLinear s;
  OnlineProblem p = s.problem(60, 0.9);
  std::mt19937_64 rng(32);
  std::normal_distribution<double> g(0.0, 0.05);
  for (auto& b : p.data)
    for (long i = 0; i < b.size(); ++i) b[i] += g(rng);
  p.predictor.primal = PrimalPredictor::optical_flow;
  p.predictor.dual = DualPredictor::affine_scaling;
  p.predictor.flow_raster = 6;
  const OnlineResult a = run_online(p, 29);
  const OnlineResult b = run_online(p, 59);
  for (std::size_t k = 0; k < a.x.size(); ++k) {
    CHECK(a.x[k] == b.x[k]);
    CHECK(a.y[k] == b.y[k]);
  }
  CHECK_THROWS_AS(run_online(p, 60), PreconditionError);
}

TEST_CASE("iterates stay feasible") {
  const SmallLinear s;
  OnlineProblem p = s.problem(50, 0.6);
  for (auto& b : p.data) b *= 5.0;  // pushes the data term against the upper bound
  const OnlineResult r = run_online(p, 49);
  for (std::size_t k = 0; k < r.x.size(); ++k) {
    CHECK(p.box.contains(r.x[k]));
    CHECK(DualBall(0.6).contains(r.y[k], 1e-12));
  }
}

TEST_CASE("one forward and one adjoint solve per EIT frame") {
  const Mesh mesh = make_disk_mesh(3, 8, 0.5);
  auto sys = std::make_shared<const CemSystem>(mesh);
  auto model = std::make_shared<EitFrameModel>(sys);
  OnlineProblem p;
  p.models = {model};
  const Vec truth = Vec::Constant(sys->n_nodes(), 1.2);
  p.data.assign(12, measurement_vector(solve_forward(*sys, truth)));
  p.precision_sq = Vec::Constant(sys->measurement_dim(), 100.0);
  p.K = std::make_shared<MeshGradient>(mesh);
  p.geometry = std::make_shared<MeshGeometry>(mesh);
  p.box = BoxConstraint(0.5, 3.0);
  p.alpha = 0.9;
  p.step = {0.0053, 10.0};
  p.predictor.primal = PrimalPredictor::optical_flow;
  p.predictor.dual = DualPredictor::affine_scaling;
  p.predictor.flow_raster = 16;
  p.x_init = Vec::Ones(sys->n_nodes());
  const OnlineResult r = run_online(p, 11);
  for (const auto& l : r.log) {
    CHECK(l.forward_solves == 1);
    CHECK(l.adjoint_solves == 1);
  }
  CHECK(model->forward_solves() == 12);
  CHECK(model->adjoint_solves() == 12);
  CHECK(model->factorisations() == 12);
}
