#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace dynreg {

/// Triangulated 2D domain with boundary electrode arcs (ordered node chains).
struct Mesh {
  Eigen::Matrix2Xd nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::vector<int>> electrodes;
  int symmetry_order = 0;  // rotational symmetry of the generator, 0 if unknown

  long n_nodes() const { return nodes.cols(); }
  long n_triangles() const { return static_cast<long>(triangles.size()); }
  long n_electrodes() const { return static_cast<long>(electrodes.size()); }
  double signed_area(long t) const;
  Eigen::Vector2d centroid(long t) const;
  Eigen::Matrix2Xd centroids() const;
  /// Throws AssemblyError naming the first degenerate or negatively oriented triangle,
  /// PreconditionError for empty or overlapping electrodes.
  void validate() const;
};

/// Structured disk of radius 1: ring m carries sectors*m nodes, so the mesh is invariant
/// under rotation by 2*pi/sectors.  Electrode e is centred in sector e and spans
/// round(coverage * rings) boundary edges.
Mesh make_disk_mesh(int rings, int n_electrodes = 16, double coverage = 0.5);

/// perm[i] = index of the node at the position of node i rotated by `angle`.
std::vector<int> rotation_permutation(const Mesh& mesh, double angle, double tol = 1e-9);

/// Plain-text format:
///   nodes <n>        followed by n lines "x y"
///   triangles <t>    followed by t lines "a b c"
///   electrodes <e>   followed by e lines "<count> i0 i1 ..."
void write_mesh(const Mesh& mesh, std::ostream& os);
Mesh read_mesh(std::istream& is);

}  // namespace dynreg
