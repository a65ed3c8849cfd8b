#include "dynreg/regularisers.hpp"

#include <algorithm>
#include <cmath>

#include "dynreg/errors.hpp"
#include "dynreg/forward_linear.hpp"

namespace dynreg {

namespace {

Vec flatten(const Field& y) { return Eigen::Map<const Vec>(y.data(), y.size()); }

}  // namespace

double GradientOperator::norm_sq() const {
  if (norm_sq_ < 0.0) {
    const double n = power_iteration_norm([this](const Vec& x) { return adjoint_apply(apply(x)); }, input_dim());
    norm_sq_ = n * n;
  }
  return norm_sq_;
}

GridGradient::GridGradient(long nx, long ny, double spacing) : nx_(nx), ny_(ny), h_(spacing) {
  if (nx < 1 || ny < 1 || !(spacing > 0.0)) throw PreconditionError("grid gradient needs positive sizes");
  centers_.resize(2, nx * ny);
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i)
      centers_.col(j * nx + i) = Eigen::Vector2d(-1.0 + (i + 0.5) * h_, -1.0 + (j + 0.5) * h_);
}

Field GridGradient::apply(const Vec& x) const {
  if (x.size() != input_dim()) throw DimensionError("grid gradient: frame size mismatch");
  Field g = Field::Zero(2, n_sites());
  for (long j = 0; j < ny_; ++j)
    for (long i = 0; i < nx_; ++i) {
      const long p = j * nx_ + i;
      if (i + 1 < nx_) g(0, p) = h_ * (x[p + 1] - x[p]);
      if (j + 1 < ny_) g(1, p) = h_ * (x[p + nx_] - x[p]);
    }
  return g;
}

Vec GridGradient::adjoint_apply(const Field& y) const {
  if (y.cols() != n_sites()) throw DimensionError("grid gradient: field size mismatch");
  Vec out = Vec::Zero(input_dim());
  for (long j = 0; j < ny_; ++j)
    for (long i = 0; i < nx_; ++i) {
      const long p = j * nx_ + i;
      if (i + 1 < nx_) {
        out[p + 1] += h_ * y(0, p);
        out[p] -= h_ * y(0, p);
      }
      if (j + 1 < ny_) {
        out[p + nx_] += h_ * y(1, p);
        out[p] -= h_ * y(1, p);
      }
    }
  return out;
}

MeshGradient::MeshGradient(const Mesh& mesh) : n_nodes_(mesh.n_nodes()), tris_(mesh.triangles) {
  weighted_grads_.resize(tris_.size());
  centroids_ = mesh.centroids();
  for (long t = 0; t < mesh.n_triangles(); ++t) {
    const double a = mesh.signed_area(t);
    if (!(a > 1e-14)) throw AssemblyError("degenerate triangle " + std::to_string(t));
    const auto& tri = tris_[static_cast<std::size_t>(t)];
    Eigen::Matrix<double, 2, 3> G;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d p1 = mesh.nodes.col(tri[(k + 1) % 3]);
      const Eigen::Vector2d p2 = mesh.nodes.col(tri[(k + 2) % 3]);
      G.col(k) = 0.5 * Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x());  // area * grad
    }
    weighted_grads_[static_cast<std::size_t>(t)] = G;
  }
}

Field MeshGradient::apply(const Vec& x) const {
  if (x.size() != n_nodes_) throw DimensionError("mesh gradient: frame size mismatch");
  Field g(2, n_sites());
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    const auto& tri = tris_[t];
    g.col(static_cast<long>(t)) = weighted_grads_[t] * Eigen::Vector3d(x[tri[0]], x[tri[1]], x[tri[2]]);
  }
  return g;
}

Vec MeshGradient::adjoint_apply(const Field& y) const {
  if (y.cols() != n_sites()) throw DimensionError("mesh gradient: field size mismatch");
  Vec out = Vec::Zero(n_nodes_);
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    const Eigen::Vector3d c = weighted_grads_[t].transpose() * y.col(static_cast<long>(t));
    for (int a = 0; a < 3; ++a) out[tris_[t][a]] += c[a];
  }
  return out;
}

Vec site_norms(const Field& y) { return y.colwise().norm().transpose(); }

double tv_value(const GradientOperator& K, const Vec& x) { return site_norms(K.apply(x)).sum(); }

double inner(const Field& a, const Field& b) {
  if (a.cols() != b.cols()) throw DimensionError("field size mismatch");
  return flatten(a).dot(flatten(b));
}

DualBall::DualBall(double r) : radius(r) {
  if (!(r > 0.0)) throw PreconditionError("dual ball radius must be positive");
}

bool DualBall::contains(const Field& y, double tol) const {
  return (site_norms(y).array() <= radius * (1.0 + tol)).all();
}

Field project_dual_ball(const DualBall& ball, const Field& y) {
  Field out = y;
  for (long s = 0; s < y.cols(); ++s) {
    const double n = y.col(s).norm();
    if (n > ball.radius) out.col(s) *= ball.radius / n;
  }
  return out;
}

BoxConstraint::BoxConstraint(double lo, double hi) : lower(lo), upper(hi) {
  if (!(lo < hi)) throw PreconditionError("box needs lower < upper");
}

bool BoxConstraint::contains(const Vec& x, double tol) const {
  return (x.array() >= lower - tol).all() && (x.array() <= upper + tol).all();
}

Vec prox_box(const BoxConstraint& box, const Vec& x, double) { return x.cwiseMax(box.lower).cwiseMin(box.upper); }

SiteRadii SiteRadii::uniform(std::size_t frames, long sites, double r) {
  SiteRadii h;
  h.radii.assign(frames, Vec::Constant(sites, r));
  return h;
}

double rn_value_under_dual_dynamics(const GradientOperator& K, const Trajectory& frames, const SiteRadii& hull,
                                    const DualBall& ball) {
  if (hull.radii.size() != frames.size()) throw DimensionError("one radius vector per frame required");
  double total = 0.0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Vec& r = hull.radii[k];
    if (r.size() != K.n_sites()) throw DimensionError("one radius per site required");
    if ((r.array() < 0.0).any()) throw PreconditionError("negative radius: dual constraint set is empty");
    const Vec n = site_norms(K.apply(frames[k]));
    total += n.dot(r.cwiseMin(ball.radius));
  }
  return total;
}

}  // namespace dynreg
