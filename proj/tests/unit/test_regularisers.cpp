#include <doctest.h>

#include <cmath>
#include <random>

#include "dynreg/regularisers.hpp"

using namespace dynreg;

namespace {
Vec random_vec(std::mt19937_64& rng, long n) {
  std::normal_distribution<double> g;
  Vec v(n);
  for (long i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

Field random_field(std::mt19937_64& rng, long sites, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Field y(2, sites);
  for (long i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
  return y;
}
}  // namespace

TEST_CASE("grid gradient of constants and ramps") {
  const long n = 9;
  const GridGradient K = GridGradient::square(n);
  CHECK(K.apply(Vec::Constant(n * n, 3.7)).norm() == 0.0);
  CHECK(tv_value(K, Vec::Constant(n * n, 3.7)) == 0.0);

  Vec ramp(n * n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) ramp[j * n + i] = 2.0 * i - 0.5 * j;
  const Field g = K.apply(ramp);
  const double h = K.spacing();
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) {
      const long p = j * n + i;
      // Neumann boundary: the last column/row has no forward difference
      CHECK(g(0, p) == doctest::Approx(i + 1 < n ? 2.0 * h : 0.0));
      CHECK(g(1, p) == doctest::Approx(j + 1 < n ? -0.5 * h : 0.0));
    }
}

TEST_CASE("grid gradient adjoint on 100 random pairs") {
  std::mt19937_64 rng(21);
  const GridGradient K(7, 5, 0.3);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Vec x = random_vec(rng, K.input_dim());
    const Field y = random_field(rng, K.n_sites());
    const double l = inner(K.apply(x), y), r = x.dot(K.adjoint_apply(y));
    worst = std::max(worst, std::abs(l - r) / std::max(std::abs(l), 1e-300));
  }
  CHECK(worst <= 1e-12);
  // ||K||^2 of forward differences is below 8 h^2
  CHECK(K.norm_sq() < 8 * 0.09);
  CHECK(K.norm_sq() > 4 * 0.09);
}

TEST_CASE("unit step over half the grid") {
  for (long n : {4, 8, 32}) {
    const GridGradient K = GridGradient::square(n);
    Vec x = Vec::Zero(n * n);
    for (long j = 0; j < n; ++j)
      for (long i = n / 2; i < n; ++i) x[j * n + i] = 1.0;
    // one jump per row, n rows, each weighted by h
    CHECK(tv_value(K, x) == doctest::Approx(n * K.spacing()).epsilon(1e-14));
    CHECK(tv_value(K, 2.0 * x) == doctest::Approx(2.0 * tv_value(K, x)).epsilon(1e-15));
  }
}

TEST_CASE("mesh gradient") {
  const Mesh mesh = make_disk_mesh(4, 8, 0.5);
  const MeshGradient K(mesh);
  CHECK(K.n_sites() == mesh.n_triangles());
  CHECK(K.apply(Vec::Constant(mesh.n_nodes(), 1.3)).norm() <= 1e-14);

  // affine function: per-triangle gradient is exact, so TV = area * |grad|
  Vec x(mesh.n_nodes());
  for (long i = 0; i < x.size(); ++i) x[i] = 3.0 * mesh.nodes(0, i) - 4.0 * mesh.nodes(1, i) + 1.0;
  double area = 0.0;
  for (long t = 0; t < mesh.n_triangles(); ++t) area += mesh.signed_area(t);
  CHECK(tv_value(K, x) == doctest::Approx(5.0 * area).epsilon(1e-12));

  std::mt19937_64 rng(22);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Vec a = random_vec(rng, K.input_dim());
    const Field y = random_field(rng, K.n_sites());
    const double l = inner(K.apply(a), y), r = a.dot(K.adjoint_apply(y));
    worst = std::max(worst, std::abs(l - r) / std::max(std::abs(l), 1e-300));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("TV equals its dual maximisation") {
  std::mt19937_64 rng(23);
  const GridGradient K = GridGradient::square(6);
  const Vec x = random_vec(rng, K.input_dim());
  const Field kx = K.apply(x);
  // projected ascent from a random unit field
  Field y = project_dual_ball(DualBall(1.0), random_field(rng, K.n_sites()));
  for (int it = 0; it < 50; ++it) y = project_dual_ball(DualBall(1.0), y + 10.0 * kx);
  CHECK(std::abs(inner(y, kx) - tv_value(K, x)) <= 1e-8);
}

TEST_CASE("dual ball projection") {
  const DualBall ball(0.5);
  Field y(2, 3);
  y << 0.1, 0.6, 0.0,
       0.2, 0.8, -0.3;
  const Field p = project_dual_ball(ball, y);
  CHECK(p.col(0) == y.col(0));
  CHECK(p.col(2) == y.col(2));
  CHECK(p.col(1).norm() == doctest::Approx(0.5));
  CHECK(p(0, 1) / p(1, 1) == doctest::Approx(0.75));
  CHECK(ball.contains(p));
  CHECK_FALSE(ball.contains(y));

  std::mt19937_64 rng(24);
  for (int t = 0; t < 20; ++t) {
    const Field r = random_field(rng, 50, 2.0);
    const Field once = project_dual_ball(ball, r);
    CHECK((project_dual_ball(ball, once) - once).cwiseAbs().maxCoeff() <= 1e-15);
  }
  CHECK_THROWS_AS(DualBall(0.0), PreconditionError);
}

TEST_CASE("box clip") {
  const BoxConstraint box(0.5, 3.0);
  Vec x(4);
  x << 1.0, 3.5, 0.1, 2.0;
  const Vec c = prox_box(box, x, 0.7);
  CHECK(c[0] == 1.0);
  CHECK(c[1] == 3.0);
  CHECK(c[2] == 0.5);
  CHECK(c == prox_box(box, x, 100.0));
  CHECK(box.contains(c));

  std::mt19937_64 rng(25);
  for (int t = 0; t < 100; ++t) {
    const Vec a = 2.0 * random_vec(rng, 10), b = 2.0 * random_vec(rng, 10);
    CHECK((prox_box(box, a) - prox_box(box, b)).norm() <= (a - b).norm());
  }
  CHECK_THROWS_AS(BoxConstraint(2.0, 1.0), PreconditionError);
}

TEST_CASE("R under dual dynamics") {
  std::mt19937_64 rng(26);
  const GridGradient K = GridGradient::square(5);
  std::vector<Vec> f;
  for (int k = 0; k < 4; ++k) f.push_back(random_vec(rng, K.input_dim()));
  const Trajectory x(f);
  const double alpha = 0.8;
  const DualBall ball(alpha);

  double framewise = 0.0;
  for (const auto& fr : f) framewise += alpha * tv_value(K, fr);
  CHECK(rn_value_under_dual_dynamics(K, x, SiteRadii::uniform(4, K.n_sites(), 10.0), ball) ==
        doctest::Approx(framewise).epsilon(1e-14));
  CHECK(rn_value_under_dual_dynamics(K, x, SiteRadii::uniform(4, K.n_sites(), 0.0), ball) == 0.0);

  SiteRadii r = SiteRadii::uniform(4, K.n_sites(), 0.0);
  std::uniform_real_distribution<double> u(0.0, alpha);
  for (auto& v : r.radii)
    for (long s = 0; s < v.size(); ++s) v[s] = u(rng);
  SiteRadii half = r;
  for (auto& v : half.radii) v *= 0.5;
  CHECK(rn_value_under_dual_dynamics(K, x, half, ball) ==
        doctest::Approx(0.5 * rn_value_under_dual_dynamics(K, x, r, ball)).epsilon(1e-14));

  r.radii[1][0] = -1.0;
  CHECK_THROWS_AS(rn_value_under_dual_dynamics(K, x, r, ball), PreconditionError);
  CHECK_THROWS_AS(rn_value_under_dual_dynamics(K, x, SiteRadii::uniform(3, K.n_sites(), 1.0), ball), DimensionError);
}
