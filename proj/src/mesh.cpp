#include "depthscan/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ds {

namespace {

constexpr double kMinTriangleArea = 1e-12;  // m^2

inline double area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                   const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

double triangle_area(const TriangleMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  return area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
}

double surface_area(const TriangleMesh& mesh) {
  double total = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.triangle_count()); ++t) total += triangle_area(mesh, t);
  return total;
}

double signed_volume(const TriangleMesh& mesh) {
  double total = 0.0;
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector3d& a = mesh.vertices[tri[0]];
    const Eigen::Vector3d& b = mesh.vertices[tri[1]];
    const Eigen::Vector3d& c = mesh.vertices[tri[2]];
    total += a.dot(b.cross(c)) / 6.0;
  }
  return total;
}

Eigen::Vector3d centroid(const TriangleMesh& mesh) {
  if (mesh.empty()) throw ContractViolation("centroid: empty mesh");
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& v : mesh.vertices) sum += v;
  return sum / static_cast<double>(mesh.vertices.size());
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> bounding_box(const TriangleMesh& mesh) {
  if (mesh.empty()) throw ContractViolation("bounding_box: empty mesh");
  Eigen::Vector3d lo = mesh.vertices.front();
  Eigen::Vector3d hi = mesh.vertices.front();
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return {lo, hi};
}

double vertical_extent(const TriangleMesh& mesh) {
  const auto [lo, hi] = bounding_box(mesh);
  return hi.y() - lo.y();
}

TriangleMesh triangulate_depth(const DepthMap& depth, const Camera& cam,
                               double discontinuity_ratio) {
  if (!depth.values.same_size(cam.width, cam.height)) {
    throw ContractViolation("triangulate_depth: depth grid does not match camera");
  }
  if (discontinuity_ratio < 0.0) {
    throw ContractViolation("triangulate_depth: discontinuity ratio must be non-negative");
  }

  TriangleMesh mesh;
  Grid<int> index(cam.width, cam.height, -1);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      if (!depth.valid(u, v)) continue;
      index(u, v) = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(cam.unproject(u, v, depth.values(u, v)));
      mesh.source.push_back(Side::front);
    }
  }

  auto emit = [&](int a, int b, int c) {
    if (area(mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]) > kMinTriangleArea) {
      mesh.triangles.push_back({a, b, c});
    }
  };

  const double max_ratio = 1.0 + discontinuity_ratio;
  for (int v = 0; v + 1 < cam.height; ++v) {
    for (int u = 0; u + 1 < cam.width; ++u) {
      const int i00 = index(u, v);
      const int i10 = index(u + 1, v);
      const int i01 = index(u, v + 1);
      const int i11 = index(u + 1, v + 1);
      if (i00 < 0 || i10 < 0 || i01 < 0 || i11 < 0) continue;

      const double d00 = depth.values(u, v);
      const double d10 = depth.values(u + 1, v);
      const double d01 = depth.values(u, v + 1);
      const double d11 = depth.values(u + 1, v + 1);
      const double dmin = std::min(std::min(d00, d10), std::min(d01, d11));
      const double dmax = std::max(std::max(d00, d10), std::max(d01, d11));
      if (dmax > max_ratio * dmin) continue;  // depth jump: leave a hole

      // Split along the shorter 3D diagonal, ties to (00, 11). Winding keeps
      // face normals in the -z hemisphere (toward the camera).
      const double diag00_11 = (mesh.vertices[i00] - mesh.vertices[i11]).squaredNorm();
      const double diag10_01 = (mesh.vertices[i10] - mesh.vertices[i01]).squaredNorm();
      if (diag00_11 <= diag10_01) {
        emit(i00, i01, i11);
        emit(i00, i11, i10);
      } else {
        emit(i00, i01, i10);
        emit(i10, i01, i11);
      }
    }
  }
  return mesh;
}

TriangleMesh fuse_scan(const ScanPair& scan, double discontinuity_ratio) {
  if (!scan.front.values.same_size(scan.back.values)) {
    throw ContractViolation("fuse_scan: front/back size mismatch");
  }

  std::vector<std::pair<int, int>> violations;
  for (int v = 0; v < scan.front.height(); ++v) {
    for (int u = 0; u < scan.front.width(); ++u) {
      if (!scan.front.valid(u, v) || !scan.back.valid(u, v)) continue;
      if (scan.back.values(u, v) < scan.front.values(u, v)) violations.push_back({u, v});
    }
  }
  if (!violations.empty()) {
    std::string msg = "fuse_scan: back depth < front depth at " +
                      std::to_string(violations.size()) + " pixel(s):";
    const std::size_t shown = std::min<std::size_t>(violations.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
      msg += " (" + std::to_string(violations[i].first) + "," +
             std::to_string(violations[i].second) + ")";
    }
    if (violations.size() > shown) msg += " ...";
    throw ValidationError(msg);
  }

  TriangleMesh mesh = triangulate_depth(scan.front, scan.cam, discontinuity_ratio);
  TriangleMesh back = triangulate_depth(scan.back, scan.cam, discontinuity_ratio);

  const int offset = static_cast<int>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), back.vertices.begin(), back.vertices.end());
  mesh.source.insert(mesh.source.end(), back.vertices.size(), Side::back);
  for (const auto& tri : back.triangles) {
    // Reversed winding: back faces point away from the camera.
    mesh.triangles.push_back({tri[0] + offset, tri[2] + offset, tri[1] + offset});
  }
  return mesh;
}

std::pair<TriangleMesh, double> scale_to_height(const TriangleMesh& mesh, double target_height) {
  if (mesh.empty()) throw ContractViolation("scale_to_height: empty mesh");
  if (target_height <= 0.0) {
    throw ContractViolation("scale_to_height: target height must be positive");
  }
  const double height = vertical_extent(mesh);
  if (height <= 0.0) throw ValidationError("scale_to_height: mesh has zero vertical extent");

  const double factor = target_height / height;
  const Eigen::Vector3d pivot = centroid(mesh);
  TriangleMesh scaled = mesh;
  for (auto& v : scaled.vertices) v = pivot + factor * (v - pivot);
  return {std::move(scaled), factor};
}

}  // namespace ds
