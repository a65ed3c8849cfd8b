#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "dynreg/forward_linear.hpp"

using namespace dynreg;

namespace {
Vec random_vec(std::mt19937_64& rng, long n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}
}  // namespace

TEST_CASE("identity operator") {
  const auto I = LinearFrameOperator::identity(7);
  const Vec x = Vec::LinSpaced(7, -1, 2);
  CHECK(I.apply(x) == x);
  CHECK(I.adjoint_apply(x) == x);
  CHECK(operator_norm(I) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("gaussian kernel sums to one and is symmetric") {
  const auto k = LinearFrameOperator::gaussian_kernel(1.0, 5);
  CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((k - k.transpose()).norm() == 0.0);
  CHECK((k - k.colwise().reverse()).norm() == 0.0);
  CHECK(k(2, 2) > k(1, 2));
}

TEST_CASE("blur of a delta image is the stencil") {
  const long n = 11;
  const auto op = LinearFrameOperator::gaussian_blur(n, n, 1.0, 5);
  const auto k = LinearFrameOperator::gaussian_kernel(1.0, 5);
  Vec x = Vec::Zero(n * n);
  x[5 * n + 5] = 1.0;
  const Vec y = op.apply(x);
  double off = 0.0;
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) {
      const long a = i - 5, b = j - 5;
      const double expect = (std::abs(a) <= 2 && std::abs(b) <= 2) ? k(a + 2, b + 2) : 0.0;
      off = std::max(off, std::abs(y[j * n + i] - expect));
    }
  CHECK(off <= 1e-16);

  // orientation with an asymmetric stencil: correlation, so the delta response is the flipped kernel
  Eigen::MatrixXd ka = Eigen::MatrixXd::Zero(3, 3);
  ka(2, 1) = 1.0;  // reads the right neighbour
  const auto sh = LinearFrameOperator::stencil(n, n, ka);
  const Vec ys = sh.apply(x);
  CHECK(ys[5 * n + 4] == 1.0);
  CHECK(ys.sum() == 1.0);
}

TEST_CASE("linearity and zero") {
  std::mt19937_64 rng(1);
  const auto op = LinearFrameOperator::gaussian_blur(8, 8, 1.0, 5, {0, 3, 9, 20, 63});
  const Vec x = random_vec(rng, 64);
  CHECK(op.apply(2.0 * x) == 2.0 * op.apply(x));
  CHECK(op.apply(Vec::Zero(64)).norm() == 0.0);
  CHECK(op.adjoint_apply(Vec::Zero(5)).norm() == 0.0);
  CHECK(op.output_dim() == 5);
  CHECK_THROWS_AS(op.apply(Vec::Zero(10)), DimensionError);
}

TEST_CASE("adjoint identity on 100 random pairs") {
  std::mt19937_64 rng(2);
  const auto full = LinearFrameOperator::gaussian_blur(16, 12, 1.0, 5);
  const auto masked = LinearFrameOperator::gaussian_blur(16, 12, 0.5, 5, {1, 5, 17, 40, 100, 191});
  for (const auto* op : {&full, &masked}) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Vec h = random_vec(rng, static_cast<long>(op->input_dim()));
      const Vec y = random_vec(rng, static_cast<long>(op->output_dim()));
      const double l = op->apply(h).dot(y), r = h.dot(op->adjoint_apply(y));
      worst = std::max(worst, std::abs(l - r) / std::max(std::abs(l), 1e-300));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("operator norm") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  CHECK(operator_norm(LinearFrameOperator::from_matrix(d)) == doctest::Approx(3.0).epsilon(1e-8));

  std::mt19937_64 rng(3);
  Eigen::MatrixXd m(50, 50);
  std::normal_distribution<double> g;
  for (long i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  const double svd = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
  CHECK(std::abs(operator_norm(LinearFrameOperator::from_matrix(m)) - svd) <= 0.01 * svd);

  const auto blur = LinearFrameOperator::gaussian_blur(10, 10, 1.0, 5);
  const double bsvd = Eigen::JacobiSVD<Eigen::MatrixXd>(blur.to_dense()).singularValues()[0];
  CHECK(std::abs(operator_norm(blur) - bsvd) <= 0.01 * bsvd);
}

TEST_CASE("power iteration reports non-convergence") {
  // two iterations cannot meet this tolerance with a nearly repeated top eigenvalue
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  m(0, 0) = 1.0001;
  const auto op = LinearFrameOperator::from_matrix(m);
  CHECK_THROWS_AS(operator_norm(op, 2, 1e-300), ConvergenceError);
}
