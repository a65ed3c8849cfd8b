#include "dynreg/mesh.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <string>

#include "dynreg/errors.hpp"

namespace dynreg {

double Mesh::signed_area(long t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  const Eigen::Vector2d a = nodes.col(tri[0]), b = nodes.col(tri[1]), c = nodes.col(tri[2]);
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

Eigen::Vector2d Mesh::centroid(long t) const {
  const auto& tri = triangles[static_cast<std::size_t>(t)];
  return (nodes.col(tri[0]) + nodes.col(tri[1]) + nodes.col(tri[2])) / 3.0;
}

Eigen::Matrix2Xd Mesh::centroids() const {
  Eigen::Matrix2Xd c(2, n_triangles());
  for (long t = 0; t < n_triangles(); ++t) c.col(t) = centroid(t);
  return c;
}

void Mesh::validate() const {
  for (long t = 0; t < n_triangles(); ++t) {
    for (int v : triangles[static_cast<std::size_t>(t)])
      if (v < 0 || v >= n_nodes()) throw AssemblyError("triangle " + std::to_string(t) + " references a missing node");
    if (!(signed_area(t) > 1e-14))
      throw AssemblyError("degenerate or negatively oriented triangle " + std::to_string(t));
  }
  std::set<int> used;
  for (long e = 0; e < n_electrodes(); ++e) {
    const auto& el = electrodes[static_cast<std::size_t>(e)];
    if (el.size() < 2) throw PreconditionError("electrode " + std::to_string(e) + " has no boundary edge");
    for (int v : el) {
      if (v < 0 || v >= n_nodes()) throw PreconditionError("electrode references a missing node");
      if (!used.insert(v).second) throw PreconditionError("electrode arcs overlap at node " + std::to_string(v));
    }
  }
}

Mesh make_disk_mesh(int rings, int n_electrodes, double coverage) {
  if (rings < 1 || n_electrodes < 1) throw PreconditionError("disk mesh needs rings >= 1 and electrodes >= 1");
  const int S = n_electrodes;
  const double pi = 3.141592653589793;
  Mesh mesh;
  mesh.symmetry_order = S;
  auto ring_start = [S](int m) { return m == 0 ? 0 : 1 + S * m * (m - 1) / 2; };
  const long n = 1 + static_cast<long>(S) * rings * (rings + 1) / 2;
  mesh.nodes.resize(2, n);
  mesh.nodes.col(0).setZero();
  for (int m = 1; m <= rings; ++m) {
    const int nm = S * m;
    const double r = static_cast<double>(m) / rings;
    for (int j = 0; j < nm; ++j) {
      const double th = 2.0 * pi * j / nm;
      mesh.nodes.col(ring_start(m) + j) = Eigen::Vector2d(r * std::cos(th), r * std::sin(th));
    }
  }
  for (int j = 0; j < S; ++j) mesh.triangles.push_back({0, ring_start(1) + j, ring_start(1) + (j + 1) % S});
  for (int m = 1; m < rings; ++m) {
    const int ni = S * m, no = S * (m + 1);
    const int si = ring_start(m), so = ring_start(m + 1);
    int i = 0, o = 0;
    while (i < ni || o < no) {
      // advance along whichever ring reaches the next angle first; exact integer comparison
      const bool outer = o < no && (i == ni || static_cast<long>(o + 1) * ni <= static_cast<long>(i + 1) * no);
      if (outer) {
        mesh.triangles.push_back({si + i % ni, so + o, so + (o + 1) % no});
        ++o;
      } else {
        mesh.triangles.push_back({si + i, so + o % no, si + (i + 1) % ni});
        ++i;
      }
    }
  }
  const int per = rings;  // boundary edges per sector
  const int edges = std::max(1, static_cast<int>(std::lround(coverage * per)));
  if (edges > per) throw PreconditionError("electrode coverage above 100%");
  const int offset = (per - edges) / 2;
  const int nb = S * rings, sb = ring_start(rings);
  for (int e = 0; e < S; ++e) {
    std::vector<int> chain;
    for (int q = 0; q <= edges; ++q) chain.push_back(sb + (e * per + offset + q) % nb);
    mesh.electrodes.push_back(chain);
  }
  mesh.validate();
  return mesh;
}

std::vector<int> rotation_permutation(const Mesh& mesh, double angle, double tol) {
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<int> perm(static_cast<std::size_t>(mesh.n_nodes()), -1);
  for (long i = 0; i < mesh.n_nodes(); ++i) {
    const Eigen::Vector2d p = mesh.nodes.col(i);
    const Eigen::Vector2d q(c * p.x() - s * p.y(), s * p.x() + c * p.y());
    for (long j = 0; j < mesh.n_nodes(); ++j) {
      if ((mesh.nodes.col(j) - q).norm() <= tol) {
        perm[static_cast<std::size_t>(i)] = static_cast<int>(j);
        break;
      }
    }
    if (perm[static_cast<std::size_t>(i)] < 0) throw PreconditionError("mesh is not invariant under the rotation");
  }
  return perm;
}

void write_mesh(const Mesh& mesh, std::ostream& os) {
  os.precision(17);
  os << "nodes " << mesh.n_nodes() << "\n";
  for (long i = 0; i < mesh.n_nodes(); ++i) os << mesh.nodes(0, i) << " " << mesh.nodes(1, i) << "\n";
  os << "triangles " << mesh.n_triangles() << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "electrodes " << mesh.n_electrodes() << "\n";
  for (const auto& e : mesh.electrodes) {
    os << e.size();
    for (int v : e) os << " " << v;
    os << "\n";
  }
}

Mesh read_mesh(std::istream& is) {
  Mesh mesh;
  std::string tag;
  long n = 0;
  if (!(is >> tag >> n) || tag != "nodes") throw PreconditionError("mesh file: expected 'nodes <n>'");
  mesh.nodes.resize(2, n);
  for (long i = 0; i < n; ++i)
    if (!(is >> mesh.nodes(0, i) >> mesh.nodes(1, i))) throw PreconditionError("mesh file: truncated node list");
  if (!(is >> tag >> n) || tag != "triangles") throw PreconditionError("mesh file: expected 'triangles <t>'");
  mesh.triangles.resize(static_cast<std::size_t>(n));
  for (auto& t : mesh.triangles)
    if (!(is >> t[0] >> t[1] >> t[2])) throw PreconditionError("mesh file: truncated triangle list");
  if (!(is >> tag >> n) || tag != "electrodes") throw PreconditionError("mesh file: expected 'electrodes <e>'");
  mesh.electrodes.resize(static_cast<std::size_t>(n));
  for (auto& e : mesh.electrodes) {
    std::size_t c = 0;
    if (!(is >> c)) throw PreconditionError("mesh file: truncated electrode list");
    e.resize(c);
    for (auto& v : e)
      if (!(is >> v)) throw PreconditionError("mesh file: truncated electrode list");
  }
  mesh.validate();
  return mesh;
}

}  // namespace dynreg
