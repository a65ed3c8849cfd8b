#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "dynreg/batch_oracle.hpp"
#include "dynreg/forward_linear.hpp"

using namespace dynreg;

namespace {

Vec disk(long n, double radius, double inside) {
  const GridGradient K = GridGradient::square(n);
  Vec x = Vec::Ones(n * n);
  for (long p = 0; p < n * n; ++p)
    if (K.site_positions().col(p).norm() < radius) x[p] = inside;
  return x;
}

}  // namespace

TEST_CASE("dominant regulariser gives a flat frame") {
  const long n = 6;
  const GridGradient K = GridGradient::square(n);
  const auto A = LinearFrameOperator::gaussian_blur(n, n, 0.5, 3);
  BatchOptions opt;
  opt.tol = 1e-10;
  const FrameSolution s = solve_frame(A, Vec::Zero(n * n), Vec::Ones(n * n), K, BoxConstraint(0.5, 3.0), 1e4, opt,
                                      Vec::LinSpaced(n * n, 0.6, 2.5), Field::Zero(2, n * n));
  CHECK(tv_value(K, s.x) <= 1e-8);
  CHECK(BoxConstraint(0.5, 3.0).contains(s.x));
}

TEST_CASE("quadratic-only frame matches the normal equations") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  const long n = 4;
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n * n, n * n);
  for (long i = 0; i < M.size(); ++i) M.data()[i] += 0.1 * g(rng);
  const auto A = LinearFrameOperator::from_matrix(M);
  Vec b(n * n), w2(n * n);
  for (long i = 0; i < b.size(); ++i) {
    b[i] = g(rng);
    w2[i] = 1.0 + 0.5 * std::abs(g(rng));
  }
  const Eigen::MatrixXd N = M.transpose() * w2.asDiagonal() * M;
  const Vec exact = N.ldlt().solve(M.transpose() * w2.cwiseProduct(b));

  BatchOptions opt;
  opt.tol = 1e-12;
  opt.step = {0.9 / (N.eigenvalues().real().maxCoeff()), 1.0};
  const GridGradient K = GridGradient::square(n);
  const FrameSolution s = solve_frame(A, b, w2, K, std::nullopt, 0.0, opt, Vec::Zero(n * n), Field::Zero(2, n * n));
  CHECK(s.converged);
  CHECK((s.x - exact).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("batch objective is no worse than a cheap online trajectory") {
  const long n = 6;
  auto A = std::make_shared<LinearFrameOperator>(LinearFrameOperator::gaussian_blur(n, n, 0.5, 3));
  auto K = std::make_shared<GridGradient>(GridGradient::square(n));
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<Vec> data;
  for (int k = 0; k < 6; ++k) {
    Vec b = A->apply(disk(n, 0.3 + 0.1 * k, 2.0));
    for (long i = 0; i < b.size(); ++i) b[i] += g(rng);
    data.push_back(b);
  }
  BatchProblem bp;
  bp.models = {A};
  bp.data = data;
  bp.precision_sq = Vec::Constant(n * n, 4.0);
  bp.K = K;
  bp.box = BoxConstraint(0.5, 3.0);
  bp.alpha = 0.8;
  bp.horizon = 5;
  bp.options.tol = 1e-9;
  const BatchResult br = solve_batch(bp);
  CHECK(br.converged);

  OnlineProblem op;
  op.models = {A};
  op.data = data;
  op.precision_sq = bp.precision_sq;
  op.K = K;
  op.box = *bp.box;
  op.alpha = bp.alpha;
  op.step = {0.05, 256.0};
  op.predictor.primal = PrimalPredictor::zero_motion;
  op.predictor.dual = DualPredictor::identity;
  op.x_init = Vec::Ones(n * n);
  const OnlineResult on = run_online(op, 5);
  double q_online = 0.0;
  for (long k = 0; k <= 5; ++k)
    q_online += frame_objective(*A, on.x[static_cast<std::size_t>(k)], data[static_cast<std::size_t>(k)],
                                bp.precision_sq, *K, bp.alpha);
  CHECK(br.objective <= q_online);

  const EResult e = compute_e(on.x, br.x, bp);
  for (std::size_t k = 0; k < e.e.size(); ++k) {
    CHECK(e.e[k] >= 0.0);
    CHECK(e.increments[k] >= 0.0);
  }
  CHECK(e.e.back() == doctest::Approx(q_online - br.objective).epsilon(1e-12));
  const EResult zero = compute_e(br.x, br.x, bp);
  for (double v : zero.e) CHECK(v == 0.0);
}

TEST_CASE("non-convergence is an error when required") {
  const long n = 4;
  const auto A = LinearFrameOperator::gaussian_blur(n, n, 0.5, 3);
  BatchOptions opt;
  opt.max_iter = 3;
  opt.block = 1;
  const GridGradient K = GridGradient::square(n);
  CHECK_THROWS_AS(solve_frame(A, Vec::Ones(n * n), Vec::Ones(n * n), K, std::nullopt, 0.5, opt,
                              Vec::Zero(n * n), Field::Zero(2, n * n)),
                  ConvergenceError);
}

TEST_CASE("minimum-R solution with identity operator is the data") {
  const long n = 5;
  std::vector<std::shared_ptr<const FrameModel>> models{
      std::make_shared<LinearFrameOperator>(LinearFrameOperator::identity(n * n))};
  const GridGradient K = GridGradient::square(n);
  std::vector<Vec> exact{disk(n, 0.5, 2.0), disk(n, 0.7, 1.5)};
  const MinRResult r = min_r_solution(models, exact, Vec::Ones(n * n), K, 1);
  for (std::size_t k = 0; k < 2; ++k) CHECK((r.x[k] - exact[k]).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(r.residual_max <= 1e-8);
}

TEST_CASE("minimum-R solution recovers a flat disk phantom") {
  const long n = 16;
  auto A = std::make_shared<LinearFrameOperator>(LinearFrameOperator::gaussian_blur(n, n, 0.5, 5));
  const GridGradient K = GridGradient::square(n);
  const Vec truth = disk(n, 0.5, 2.0);
  const MinRResult r = min_r_solution({A}, {A->apply(truth)}, Vec::Constant(n * n, 16.0), K, 0);
  CHECK(r.residual_max <= 1e-8);
  CHECK(r.r_value == doctest::Approx(tv_value(K, truth)).epsilon(1e-6));
}

TEST_CASE("minimum-R rejects nonlinear models") {
  struct Square : FrameModel {
    std::size_t input_dim() const override { return 1; }
    std::size_t output_dim() const override { return 1; }
    bool is_linear() const override { return false; }
    Vec apply(const Vec& x) const override { return x.cwiseProduct(x); }
    Vec jacobian_apply(const Vec& x, const Vec& h) const override { return 2.0 * x.cwiseProduct(h); }
    Vec jacobian_adjoint_apply(const Vec& x, const Vec& r) const override { return 2.0 * x.cwiseProduct(r); }
  };
  const GridGradient K(1, 1, 1.0);
  CHECK_THROWS_AS(min_r_solution({std::make_shared<Square>()}, {Vec::Ones(1)}, Vec::Ones(1), K, 0), UnsupportedError);
}
