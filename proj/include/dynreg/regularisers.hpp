#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "dynreg/core.hpp"
#include "dynreg/mesh.hpp"

namespace dynreg {

/// Vector field with one 2-vector per site (pixel or triangle).
using Field = Eigen::Matrix2Xd;

/// Per-frame discrete gradient K with its transpose.
class GradientOperator {
 public:
  virtual ~GradientOperator() = default;
  virtual long input_dim() const = 0;
  virtual long n_sites() const = 0;
  virtual Field apply(const Vec& x) const = 0;
  virtual Vec adjoint_apply(const Field& y) const = 0;
  /// Site locations, used for warping dual fields.
  virtual const Eigen::Matrix2Xd& site_positions() const = 0;
  /// ||K||^2 by power iteration, cached.
  double norm_sq() const;

 private:
  mutable double norm_sq_ = -1.0;
};

/// Forward differences with Neumann boundary on an nx-by-ny grid over [-1,1]^2,
/// scaled by the pixel spacing h so that sum_sites |(Kx)_s| approximates the TV integral.
class GridGradient : public GradientOperator {
 public:
  GridGradient(long nx, long ny, double spacing);
  /// Pixel grid covering [-1,1]^2.
  static GridGradient square(long n) { return GridGradient(n, n, 2.0 / static_cast<double>(n)); }

  long input_dim() const override { return nx_ * ny_; }
  long n_sites() const override { return nx_ * ny_; }
  Field apply(const Vec& x) const override;
  Vec adjoint_apply(const Field& y) const override;
  const Eigen::Matrix2Xd& site_positions() const override { return centers_; }
  long nx() const { return nx_; }
  long ny() const { return ny_; }
  double spacing() const { return h_; }

 private:
  long nx_, ny_;
  double h_;
  Eigen::Matrix2Xd centers_;
};

/// (K sigma)_T = area_T * grad(sigma)|_T for P1 nodal functions.
class MeshGradient : public GradientOperator {
 public:
  explicit MeshGradient(const Mesh& mesh);

  long input_dim() const override { return n_nodes_; }
  long n_sites() const override { return static_cast<long>(tris_.size()); }
  Field apply(const Vec& x) const override;
  Vec adjoint_apply(const Field& y) const override;
  const Eigen::Matrix2Xd& site_positions() const override { return centroids_; }

 private:
  long n_nodes_;
  std::vector<std::array<int, 3>> tris_;
  std::vector<Eigen::Matrix<double, 2, 3>> weighted_grads_;  // area * hat gradients
  Eigen::Matrix2Xd centroids_;
};

Vec site_norms(const Field& y);
double tv_value(const GradientOperator& K, const Vec& x);
double inner(const Field& a, const Field& b);

/// Pointwise 2-ball of radius alpha at every site.
struct DualBall {
  double radius = 1.0;
  explicit DualBall(double r);
  bool contains(const Field& y, double tol = 1e-12) const;
};

Field project_dual_ball(const DualBall& ball, const Field& y);

struct BoxConstraint {
  double lower = 0.5;
  double upper = 3.0;
  BoxConstraint() = default;
  BoxConstraint(double lo, double hi);
  bool contains(const Vec& x, double tol = 0.0) const;
};

/// Componentwise clip; the step is accepted for interface symmetry and ignored.
Vec prox_box(const BoxConstraint& box, const Vec& x, double step = 1.0);

/// Hull description restricted to products of balls: radii[k][s] bounds site s of frame k.
struct SiteRadii {
  std::vector<Vec> radii;
  static SiteRadii uniform(std::size_t frames, long sites, double r);
};

/// sup of <y, K x> over y in (ball)^{N+1} intersected with the radius box.
double rn_value_under_dual_dynamics(const GradientOperator& K, const Trajectory& frames, const SiteRadii& hull,
                                    const DualBall& ball = DualBall(1.0));

}  // namespace dynreg
