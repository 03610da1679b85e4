#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "depthscan/types.hpp"

namespace ds {

enum class Side : std::uint8_t { front = 0, back = 1 };

/// Indexed triangle set. Front-sourced faces wind so their normals point
/// toward the camera (-z hemisphere); back-sourced faces point away.
struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Side> source;  // per vertex

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  bool empty() const { return vertices.empty(); }
};

/// Front/back depth pair sharing one camera; back depth >= front depth
/// wherever both masks are valid.
struct ScanPair {
  DepthMap front;
  DepthMap back;
  Camera cam;
};

double triangle_area(const TriangleMesh& mesh, int t);
double surface_area(const TriangleMesh& mesh);
/// Sum of signed tetrahedron volumes against the origin; zero for flat or
/// mirror-degenerate geometry, positive for outward-wound closed surfaces.
double signed_volume(const TriangleMesh& mesh);
Eigen::Vector3d centroid(const TriangleMesh& mesh);
std::pair<Eigen::Vector3d, Eigen::Vector3d> bounding_box(const TriangleMesh& mesh);
/// Extent along the vertical axis (camera -y is up).
double vertical_extent(const TriangleMesh& mesh);

/// Back-projects valid pixels to vertices (row-major order) and emits two
/// triangles per fully-valid 2x2 quad, split along the shorter 3D diagonal.
/// Quads whose max/min depth ratio exceeds 1 + discontinuity_ratio become
/// holes. An empty mask yields an empty mesh.
TriangleMesh triangulate_depth(const DepthMap& depth, const Camera& cam,
                               double discontinuity_ratio = 0.03);

/// Triangulates front and back independently, flips back-face winding, and
/// concatenates with per-vertex source tags. The silhouette seam stays open.
/// Throws ValidationError when back depth < front depth on shared pixels.
TriangleMesh fuse_scan(const ScanPair& scan, double discontinuity_ratio = 0.03);

/// Uniform scale about the mesh centroid so the vertical extent equals
/// target_height; returns the scaled mesh and the applied factor.
std::pair<TriangleMesh, double> scale_to_height(const TriangleMesh& mesh, double target_height);

}  // namespace ds
