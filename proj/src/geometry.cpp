#include "dynreg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynreg/errors.hpp"

namespace dynreg {

namespace {

Eigen::Matrix2Xd raster_centers(long n) {
  const double h = 2.0 / static_cast<double>(n);
  Eigen::Matrix2Xd c(2, n * n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) c.col(j * n + i) = Eigen::Vector2d(-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h);
  return c;
}

Eigen::Vector3d barycentric(const Mesh& m, long t, const Eigen::Vector2d& p) {
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  const Eigen::Vector2d a = m.nodes.col(tri[0]), b = m.nodes.col(tri[1]), c = m.nodes.col(tri[2]);
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
  const double l1 = ((p.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (p.y() - a.y())) / det;
  const double l2 = ((b.x() - a.x()) * (p.y() - a.y()) - (p.x() - a.x()) * (b.y() - a.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

}  // namespace

Vec FrameGeometry::rasterise(const Vec& x, long n) const { return sample_primal(x, raster_centers(n)); }

Vec FrameGeometry::from_raster(const Vec& img, long n) const {
  const auto& pos = unknown_positions();
  Vec out(pos.cols());
  for (long i = 0; i < pos.cols(); ++i) out[i] = bilinear(img, n, pos.col(i));
  return out;
}

double bilinear(const Vec& img, long n, const Eigen::Vector2d& p) {
  if (img.size() != n * n) throw DimensionError("raster size mismatch");
  const double h = 2.0 / static_cast<double>(n);
  auto coord = [&](double v) {
    double u = (v + 1.0) / h - 0.5;
    return std::clamp(u, 0.0, static_cast<double>(n - 1));
  };
  const double u = coord(p.x()), v = coord(p.y());
  const long i0 = std::min(static_cast<long>(std::floor(u)), std::max(n - 2, 0L));
  const long j0 = std::min(static_cast<long>(std::floor(v)), std::max(n - 2, 0L));
  const long i1 = std::min(i0 + 1, n - 1), j1 = std::min(j0 + 1, n - 1);
  const double fu = u - static_cast<double>(i0), fv = v - static_cast<double>(j0);
  return (1 - fu) * (1 - fv) * img[j0 * n + i0] + fu * (1 - fv) * img[j0 * n + i1] + (1 - fu) * fv * img[j1 * n + i0] +
         fu * fv * img[j1 * n + i1];
}

GridGeometry::GridGeometry(long n) : n_(n), centers_(raster_centers(n)) {
  if (n < 2) throw PreconditionError("grid geometry needs n >= 2");
}

Vec GridGeometry::sample_primal(const Vec& x, const Eigen::Matrix2Xd& pts) const {
  Vec out(pts.cols());
  for (long i = 0; i < pts.cols(); ++i) out[i] = bilinear(x, n_, pts.col(i));
  return out;
}

Field GridGeometry::sample_dual(const Field& y, const Eigen::Matrix2Xd& pts) const {
  const Vec y0 = y.row(0).transpose(), y1 = y.row(1).transpose();
  Field out(2, pts.cols());
  for (long i = 0; i < pts.cols(); ++i) {
    out(0, i) = bilinear(y0, n_, pts.col(i));
    out(1, i) = bilinear(y1, n_, pts.col(i));
  }
  return out;
}

MeshGeometry::MeshGeometry(const Mesh& mesh) : mesh_(mesh), centroids_(mesh.centroids()) {
  bucket_tris_.assign(static_cast<std::size_t>(buckets_ * buckets_), {});
  const double w = 2.0 / static_cast<double>(buckets_);
  auto cell = [&](double v) { return std::clamp(static_cast<long>(std::floor((v + 1.0) / w)), 0L, buckets_ - 1); };
  for (long t = 0; t < mesh_.n_triangles(); ++t) {
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(t)];
    Eigen::Vector2d lo = mesh_.nodes.col(tri[0]), hi = lo;
    for (int a = 1; a < 3; ++a) {
      lo = lo.cwiseMin(mesh_.nodes.col(tri[a]));
      hi = hi.cwiseMax(mesh_.nodes.col(tri[a]));
    }
    for (long by = cell(lo.y()); by <= cell(hi.y()); ++by)
      for (long bx = cell(lo.x()); bx <= cell(hi.x()); ++bx)
        bucket_tris_[static_cast<std::size_t>(by * buckets_ + bx)].push_back(t);
  }
}

long MeshGeometry::locate(const Eigen::Vector2d& p, Eigen::Vector3d& bary) const {
  const double w = 2.0 / static_cast<double>(buckets_);
  auto cell = [&](double v) { return std::clamp(static_cast<long>(std::floor((v + 1.0) / w)), 0L, buckets_ - 1); };
  long best = -1;
  double best_min = -std::numeric_limits<double>::infinity();
  for (long t : bucket_tris_[static_cast<std::size_t>(cell(p.y()) * buckets_ + cell(p.x()))]) {
    const Eigen::Vector3d l = barycentric(mesh_, t, p);
    if (l.minCoeff() > best_min) {
      best_min = l.minCoeff();
      best = t;
      bary = l;
    }
  }
  if (best_min < -1e-12) {
    // outside the polygon: fall back to a global search for the least-violating triangle
    for (long t = 0; t < mesh_.n_triangles(); ++t) {
      const Eigen::Vector3d l = barycentric(mesh_, t, p);
      if (l.minCoeff() > best_min) {
        best_min = l.minCoeff();
        best = t;
        bary = l;
      }
    }
    bary = bary.cwiseMax(0.0);
    bary /= bary.sum();
  }
  return best;
}

Vec MeshGeometry::sample_primal(const Vec& x, const Eigen::Matrix2Xd& pts) const {
  if (x.size() != mesh_.n_nodes()) throw DimensionError("mesh frame size mismatch");
  Vec out(pts.cols());
  Eigen::Vector3d l;
  for (long i = 0; i < pts.cols(); ++i) {
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(locate(pts.col(i), l))];
    out[i] = l[0] * x[tri[0]] + l[1] * x[tri[1]] + l[2] * x[tri[2]];
  }
  return out;
}

Field MeshGeometry::sample_dual(const Field& y, const Eigen::Matrix2Xd& pts) const {
  if (y.cols() != mesh_.n_triangles()) throw DimensionError("mesh field size mismatch");
  Field out(2, pts.cols());
  Eigen::Vector3d l;
  for (long i = 0; i < pts.cols(); ++i) out.col(i) = y.col(locate(pts.col(i), l));
  return out;
}

Vec warp_primal(const FrameGeometry& geo, const Vec& x, const Eigen::Matrix2Xd& disp) {
  return geo.sample_primal(x, geo.unknown_positions() - disp);
}

Field warp_dual(const FrameGeometry& geo, const Field& y, const Eigen::Matrix2Xd& disp) {
  return geo.sample_dual(y, geo.site_positions() - disp);
}

Eigen::Matrix2Xd horn_schunck(const Vec& img0, const Vec& img1, long n, const FlowParams& params) {
  if (img0.size() != n * n || img1.size() != n * n) throw DimensionError("flow images must be n x n");
  auto at = [n](const Vec& im, long i, long j) {
    i = std::clamp(i, 0L, n - 1);
    j = std::clamp(j, 0L, n - 1);
    return im[j * n + i];
  };
  const long N = n * n;
  Vec Ix(N), Iy(N), It(N);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) {
      const long p = j * n + i;
      Ix[p] = 0.25 * (at(img0, i + 1, j) - at(img0, i - 1, j) + at(img1, i + 1, j) - at(img1, i - 1, j));
      Iy[p] = 0.25 * (at(img0, i, j + 1) - at(img0, i, j - 1) + at(img1, i, j + 1) - at(img1, i, j - 1));
      It[p] = img1[p] - img0[p];
    }
  Vec u = Vec::Zero(N), v = Vec::Zero(N);
  for (int it = 0; it < params.sweeps; ++it) {
    Vec un(N), vn(N);
    for (long j = 0; j < n; ++j)
      for (long i = 0; i < n; ++i) {
        const long p = j * n + i;
        const double ub = 0.25 * (at(u, i + 1, j) + at(u, i - 1, j) + at(u, i, j + 1) + at(u, i, j - 1));
        const double vb = 0.25 * (at(v, i + 1, j) + at(v, i - 1, j) + at(v, i, j + 1) + at(v, i, j - 1));
        const double c = (Ix[p] * ub + Iy[p] * vb + It[p]) / (params.smoothness + Ix[p] * Ix[p] + Iy[p] * Iy[p]);
        un[p] = ub - Ix[p] * c;
        vn[p] = vb - Iy[p] * c;
      }
    u.swap(un);
    v.swap(vn);
  }
  const double h = 2.0 / static_cast<double>(n);
  Eigen::Matrix2Xd d(2, N);
  d.row(0) = h * u.transpose();
  d.row(1) = h * v.transpose();
  return d;
}

}  // namespace dynreg
