#pragma once

#include <tuple>
#include <vector>

#include "depthscan/mesh.hpp"

namespace ds {

/// Exact closest point on triangle (a, b, c) to p, covering face, edge, and
/// vertex regions.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

/// Bounding-volume hierarchy over mesh triangles for closest-point queries.
/// Immutable after construction and safe for concurrent queries.
class AabbTree {
 public:
  struct Hit {
    double distance = 0.0;
    Eigen::Vector3d closest = Eigen::Vector3d::Zero();
    int triangle = -1;
  };

  explicit AabbTree(const TriangleMesh& mesh, int leaf_size = 8);

  /// Exact Euclidean distance to the nearest point on any triangle.
  Hit closest(const Eigen::Vector3d& p) const;

  std::size_t triangle_count() const { return tris_.size(); }

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    int left = -1, right = -1;  // children, or -1 for leaves
    int begin = 0, end = 0;     // triangle range for leaves
  };

  int build(int begin, int end, int leaf_size);
  double box_sq_distance(const Node& node, const Eigen::Vector3d& p) const;

  std::vector<std::array<Eigen::Vector3d, 3>> tris_;  // reordered corners
  std::vector<int> tri_index_;                        // position -> original triangle
  std::vector<Eigen::Vector3d> centroids_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Distance from p to the mesh surface via the tree: (distance, closest point,
/// triangle index). Throws ContractViolation for an empty mesh.
std::tuple<double, Eigen::Vector3d, int> point_to_mesh_distance(const Eigen::Vector3d& p,
                                                                const TriangleMesh& mesh,
                                                                const AabbTree& tree);

}  // namespace ds
