#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "dynreg/forward_eit.hpp"

using namespace dynreg;

namespace {
constexpr double kPi = 3.141592653589793;

double sym_defect(const SpMat& a) { return (Eigen::MatrixXd(a) - Eigen::MatrixXd(a).transpose()).cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("disk mesh counts and symmetry") {
  const Mesh m = make_disk_mesh(8, 16, 0.5);
  CHECK(m.n_nodes() == 577);
  CHECK(m.n_triangles() == 1024);
  CHECK(m.n_electrodes() == 16);
  double area = 0.0;
  for (long t = 0; t < m.n_triangles(); ++t) area += m.signed_area(t);
  // inscribed polygon of the outer ring
  const long nb = 16 * 8;
  CHECK(area == doctest::Approx(0.5 * nb * std::sin(2 * kPi / nb)).epsilon(1e-12));
  CHECK_NOTHROW(rotation_permutation(m, 2 * kPi / 16));
  CHECK_THROWS_AS(rotation_permutation(m, 0.1), PreconditionError);
}

TEST_CASE("mesh text round trip") {
  const Mesh m = make_disk_mesh(3, 4, 0.5);
  std::stringstream ss;
  write_mesh(m, ss);
  const Mesh r = read_mesh(ss);
  CHECK(r.n_nodes() == m.n_nodes());
  CHECK((r.nodes - m.nodes).norm() == 0.0);
  CHECK(r.triangles == m.triangles);
  CHECK(r.electrodes == m.electrodes);
}

TEST_CASE("degenerate triangle is named") {
  Mesh m = make_disk_mesh(2, 4, 0.5);
  std::swap(m.triangles[3][1], m.triangles[3][2]);
  CHECK_THROWS_WITH_AS(m.validate(), "degenerate or negatively oriented triangle 3", AssemblyError);
}

TEST_CASE("assembly: symmetry, bilinearity, positivity") {
  const CemSystem sys(make_disk_mesh(4, 16, 0.5));
  const Vec one = Vec::Ones(sys.n_nodes());
  const SpMat a = assemble(sys, one);
  CHECK(sym_defect(a) <= 1e-14);
  const Eigen::MatrixXd k1 = Eigen::MatrixXd(sys.stiffness(one));
  const Eigen::MatrixXd k2 = Eigen::MatrixXd(sys.stiffness(2.0 * one));
  CHECK((k2 - 2.0 * k1).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::MatrixXd diff = Eigen::MatrixXd(assemble(sys, 2.0 * one)) - Eigen::MatrixXd(a);
  CHECK((diff - k1).cwiseAbs().maxCoeff() <= 1e-12);
  // constants lie in the kernel of the stiffness
  CHECK((k1 * Vec::Ones(sys.n_nodes())).cwiseAbs().maxCoeff() <= 1e-12);
  Vec bad = one;
  bad[5] = 0.0;
  CHECK_THROWS_AS(assemble(sys, bad), AssemblyError);
}

TEST_CASE("stiffness invariant under the mesh rotation") {
  const Mesh mesh = make_disk_mesh(4, 16, 0.5);
  const CemSystem sys(mesh);
  const auto perm = rotation_permutation(mesh, 2 * kPi / 16);
  const Eigen::MatrixXd a = Eigen::MatrixXd(assemble(sys, Vec::Ones(sys.n_nodes())));
  double worst = 0.0;
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(perm[i], perm[j]) - a(i, j)));
  CHECK(worst <= 1e-12);
}

TEST_CASE("currents: conservation, reciprocity, rotation") {
  const CemSystem sys(make_disk_mesh(8, 16, 0.5));
  const Eigen::MatrixXd I = solve_forward(sys, Vec::Ones(sys.n_nodes()));
  const double scale = I.cwiseAbs().maxCoeff();
  for (long j = 0; j < I.cols(); ++j) CHECK(std::abs(I.col(j).sum()) <= 1e-10 * scale);
  const long ne = sys.n_electrodes();
  double recip = 0.0, rot = 0.0;
  for (long i = 0; i < ne; ++i)
    for (long j = 0; j < ne; ++j) {
      recip = std::max(recip, std::abs(I(i, j) - I(j, i)));
      rot = std::max(rot, std::abs(I((i + 1) % ne, (j + 1) % ne) - I(i, j)));
    }
  CHECK(recip <= 1e-8 * scale);
  CHECK(rot <= 1e-8 * scale);
  // injected current at the driven electrode, drained elsewhere
  for (long j = 0; j < ne; ++j) CHECK(I(j, j) < 0.0);
}

TEST_CASE("inhomogeneous conductivity keeps conservation and reciprocity") {
  const CemSystem sys(make_disk_mesh(6, 8, 0.5));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  Vec s(sys.n_nodes());
  for (long i = 0; i < s.size(); ++i) s[i] = u(rng);
  const Eigen::MatrixXd I = solve_forward(sys, s);
  const double scale = I.cwiseAbs().maxCoeff();
  for (long j = 0; j < I.cols(); ++j) CHECK(std::abs(I.col(j).sum()) <= 1e-10 * scale);
  CHECK((I - I.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale);
}

TEST_CASE("monotone in a uniform conductivity increase") {
  const CemSystem sys(make_disk_mesh(4, 16, 0.5));
  const Eigen::MatrixXd I1 = solve_forward(sys, Vec::Ones(sys.n_nodes()));
  const Eigen::MatrixXd I2 = solve_forward(sys, 1.5 * Vec::Ones(sys.n_nodes()));
  for (long j = 0; j < I1.cols(); ++j) CHECK(std::abs(I2(j, j)) > std::abs(I1(j, j)));
}

TEST_CASE("measurement vector layout") {
  CHECK(measurement_vector(Eigen::MatrixXd::Zero(16, 16)).size() == 240);
  CHECK(measurement_vector(Eigen::MatrixXd::Zero(4, 4)).size() == 12);
  CHECK(measurement_vector(Eigen::MatrixXd::Zero(4, 4)).norm() == 0.0);
  Eigen::MatrixXd c(3, 3);
  c << 0, 1, 2, 3, 4, 5, 6, 7, 8;
  const Vec m = measurement_vector(c);
  Vec expect(6);
  expect << 3, 6, 1, 7, 2, 5;
  CHECK(m == expect);
  const Eigen::MatrixXd back = unpack_measurements(m, 3, 3);
  CHECK(back(1, 0) == 3.0);
  CHECK(back(0, 0) == 0.0);
  CHECK_THROWS_AS(measurement_vector(Eigen::MatrixXd::Zero(1, 1)), DimensionError);
  CHECK_THROWS_AS(unpack_measurements(Vec::Zero(5), 3, 3), DimensionError);
}

TEST_CASE("adjoint-state gradient") {
  const CemSystem sys(make_disk_mesh(3, 8, 0.5));
  const long n = sys.n_nodes();
  const Vec sigma = Vec::Ones(n);
  CHECK(jacobian_adjoint_apply(sys, sigma, Vec::Zero(sys.measurement_dim())).norm() == 0.0);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  Vec r(sys.measurement_dim());
  for (long i = 0; i < r.size(); ++i) r[i] = g(rng);
  const Vec grad = jacobian_adjoint_apply(sys, sigma, r);
  auto phi = [&](const Vec& s) { return r.dot(measurement_vector(solve_forward(sys, s))); };
  for (int t = 0; t < 10; ++t) {
    Vec h(n);
    for (long i = 0; i < n; ++i) h[i] = g(rng);
    const double exact = grad.dot(h);
    double best = 1.0;
    for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
      const double fd = (phi(sigma + eps * h) - phi(sigma - eps * h)) / (2 * eps);
      best = std::min(best, std::abs(fd - exact) / std::abs(exact));
    }
    CHECK(best <= 1e-5);
    // the tangent map is the transpose of the gradient map
    const Vec dm = jacobian_apply(sys, sigma, h);
    CHECK(dm.dot(r) == doctest::Approx(exact).epsilon(1e-10));
  }
}

TEST_CASE("gradient commutes with the mesh rotation") {
  const Mesh mesh = make_disk_mesh(4, 8, 0.5);
  const CemSystem sys(mesh);
  const long ne = sys.n_electrodes();
  // rotation-invariant residual: weight depends only on the electrode offset
  Eigen::MatrixXd R(ne, ne);
  for (long i = 0; i < ne; ++i)
    for (long j = 0; j < ne; ++j) R(i, j) = std::cos(0.7 * static_cast<double>((i - j + ne) % ne));
  const Vec grad = jacobian_adjoint_apply(sys, Vec::Ones(sys.n_nodes()), measurement_vector(R));
  const auto perm = rotation_permutation(mesh, 2 * kPi / ne);
  double worst = 0.0;
  for (long i = 0; i < grad.size(); ++i) worst = std::max(worst, std::abs(grad[perm[i]] - grad[i]));
  CHECK(worst <= 1e-8 * grad.cwiseAbs().maxCoeff());
}

TEST_CASE("frame model counts one forward and one adjoint solve per data gradient") {
  auto sys = std::make_shared<const CemSystem>(make_disk_mesh(3, 8, 0.5));
  EitFrameModel model(sys);
  const Vec s = Vec::Ones(sys->n_nodes());
  const Vec b = Vec::Zero(sys->measurement_dim());
  const Vec w2 = Vec::Ones(sys->measurement_dim());
  const DataEval d = model.data_gradient(s, b, w2);
  CHECK(model.forward_solves() == 1);
  CHECK(model.adjoint_solves() == 1);
  CHECK(model.factorisations() == 1);
  CHECK((d.gradient - jacobian_adjoint_apply(*sys, s, d.residual)).norm() <= 1e-12 * d.gradient.norm());
  CHECK(d.value == doctest::Approx(0.5 * d.prediction.squaredNorm()));
}
