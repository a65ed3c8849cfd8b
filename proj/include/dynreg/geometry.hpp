#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "dynreg/core.hpp"
#include "dynreg/mesh.hpp"
#include "dynreg/regularisers.hpp"

namespace dynreg {

/// Where the unknowns and the dual sites of a frame live, and how to resample them.
class FrameGeometry {
 public:
  virtual ~FrameGeometry() = default;
  virtual const Eigen::Matrix2Xd& unknown_positions() const = 0;
  virtual const Eigen::Matrix2Xd& site_positions() const = 0;
  /// Interpolate a frame at arbitrary points (clamped to the domain).
  virtual Vec sample_primal(const Vec& x, const Eigen::Matrix2Xd& pts) const = 0;
  /// Interpolate a site field at arbitrary points.
  virtual Field sample_dual(const Field& y, const Eigen::Matrix2Xd& pts) const = 0;
  /// Pixel image of a frame on an n-by-n raster over [-1,1]^2 (pixel j*n+i).
  virtual Vec rasterise(const Vec& x, long n) const;
  /// Resample a raster image back to the unknowns.
  virtual Vec from_raster(const Vec& img, long n) const;
};

class GridGeometry : public FrameGeometry {
 public:
  explicit GridGeometry(long n);
  const Eigen::Matrix2Xd& unknown_positions() const override { return centers_; }
  const Eigen::Matrix2Xd& site_positions() const override { return centers_; }
  Vec sample_primal(const Vec& x, const Eigen::Matrix2Xd& pts) const override;
  Field sample_dual(const Field& y, const Eigen::Matrix2Xd& pts) const override;
  long n() const { return n_; }

 private:
  long n_;
  Eigen::Matrix2Xd centers_;
};

/// P1 interpolation for nodal unknowns; nearest-centroid-triangle lookup for per-triangle fields.
class MeshGeometry : public FrameGeometry {
 public:
  explicit MeshGeometry(const Mesh& mesh);
  const Eigen::Matrix2Xd& unknown_positions() const override { return mesh_.nodes; }
  const Eigen::Matrix2Xd& site_positions() const override { return centroids_; }
  Vec sample_primal(const Vec& x, const Eigen::Matrix2Xd& pts) const override;
  Field sample_dual(const Field& y, const Eigen::Matrix2Xd& pts) const override;

  /// Containing triangle (or the closest one for points outside the polygon) and
  /// clamped barycentric coordinates.
  long locate(const Eigen::Vector2d& p, Eigen::Vector3d& bary) const;

 private:
  Mesh mesh_;
  Eigen::Matrix2Xd centroids_;
  long buckets_ = 16;
  std::vector<std::vector<long>> bucket_tris_;
};

/// Bilinear value of an n-by-n pixel image over [-1,1]^2 at p, clamped at the border.
double bilinear(const Vec& img, long n, const Eigen::Vector2d& p);

/// x(p - d(p)) at every unknown position.
Vec warp_primal(const FrameGeometry& geo, const Vec& x, const Eigen::Matrix2Xd& disp_at_unknowns);
Field warp_dual(const FrameGeometry& geo, const Field& y, const Eigen::Matrix2Xd& disp_at_sites);

struct FlowParams {
  int sweeps = 20;
  double smoothness = 0.1;
};

/// Single-level Horn-Schunck flow from img0 to img1 on an n-by-n raster over [-1,1]^2;
/// returns displacement in domain units per pixel (2 x n^2).
Eigen::Matrix2Xd horn_schunck(const Vec& img0, const Vec& img1, long n, const FlowParams& params = {});

}  // namespace dynreg
