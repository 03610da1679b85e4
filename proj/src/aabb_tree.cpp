#include "depthscan/aabb_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ds {

namespace {

Eigen::Vector3d closest_point_on_segment(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                         const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len_sq = ab.squaredNorm();
  if (len_sq == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
  return a + t * ab;
}

}  // namespace

// Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a;
  const Eigen::Vector3d ac = c - a;
  const Eigen::Vector3d ap = p - a;

  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double t = d1 / (d1 - d3);
    return a + t * ab;
  }

  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double t = d2 / (d2 - d6);
    return a + t * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + t * (c - b);
  }

  // Degenerate (collinear) triangles from external files never reach a valid
  // interior region; fall back to the nearest edge.
  if (!(va + vb + vc > 0.0)) {
    Eigen::Vector3d best = closest_point_on_segment(p, a, b);
    double best_sq = (best - p).squaredNorm();
    for (const auto& [s, e] : {std::pair{a, c}, std::pair{b, c}}) {
      const Eigen::Vector3d q = closest_point_on_segment(p, s, e);
      const double sq = (q - p).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best = q;
      }
    }
    return best;
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return a + v * ab + w * ac;
}

AabbTree::AabbTree(const TriangleMesh& mesh, int leaf_size) {
  if (mesh.empty() || mesh.triangles.empty()) {
    throw ContractViolation("AabbTree: mesh has no triangles");
  }
  const int n = static_cast<int>(mesh.triangles.size());
  tris_.resize(n);
  centroids_.resize(n);
  tri_index_.resize(n);
  std::iota(tri_index_.begin(), tri_index_.end(), 0);
  for (int t = 0; t < n; ++t) {
    const auto& tri = mesh.triangles[t];
    tris_[t] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    centroids_[t] = (tris_[t][0] + tris_[t][1] + tris_[t][2]) / 3.0;
  }
  nodes_.reserve(2 * n / std::max(leaf_size, 1) + 2);
  root_ = build(0, n, std::max(leaf_size, 1));
  centroids_.clear();
  centroids_.shrink_to_fit();
}

int AabbTree::build(int begin, int end, int leaf_size) {
  Node node;
  node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (int i = begin; i < end; ++i) {
    for (const auto& corner : tris_[i]) {
      node.lo = node.lo.cwiseMin(corner);
      node.hi = node.hi.cwiseMax(corner);
    }
  }

  if (end - begin <= leaf_size) {
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  // Median split on the widest centroid axis.
  Eigen::Vector3d clo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d chi = -clo;
  for (int i = begin; i < end; ++i) {
    clo = clo.cwiseMin(centroids_[i]);
    chi = chi.cwiseMax(centroids_[i]);
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);

  const int mid = (begin + end) / 2;
  std::vector<int> order(end - begin);
  std::iota(order.begin(), order.end(), begin);
  std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(),
                   [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });

  // Apply the permutation to the triangle storage.
  std::vector<std::array<Eigen::Vector3d, 3>> tmp_tris(order.size());
  std::vector<Eigen::Vector3d> tmp_cent(order.size());
  std::vector<int> tmp_idx(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    tmp_tris[k] = tris_[order[k]];
    tmp_cent[k] = centroids_[order[k]];
    tmp_idx[k] = tri_index_[order[k]];
  }
  std::copy(tmp_tris.begin(), tmp_tris.end(), tris_.begin() + begin);
  std::copy(tmp_cent.begin(), tmp_cent.end(), centroids_.begin() + begin);
  std::copy(tmp_idx.begin(), tmp_idx.end(), tri_index_.begin() + begin);

  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(begin, mid, leaf_size);
  const int right = build(mid, end, leaf_size);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

double AabbTree::box_sq_distance(const Node& node, const Eigen::Vector3d& p) const {
  const Eigen::Vector3d d =
      (node.lo - p).cwiseMax(p - node.hi).cwiseMax(Eigen::Vector3d::Zero());
  return d.squaredNorm();
}

AabbTree::Hit AabbTree::closest(const Eigen::Vector3d& p) const {
  Hit best;
  best.distance = std::numeric_limits<double>::infinity();
  double best_sq = std::numeric_limits<double>::infinity();

  // Depth-first with nearer child visited first; boxes farther than the best
  // squared distance are pruned.
  std::array<int, 64> stack;
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_sq_distance(node, p) >= best_sq) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const Eigen::Vector3d q = closest_point_on_triangle(p, tris_[i][0], tris_[i][1], tris_[i][2]);
        const double sq = (q - p).squaredNorm();
        if (sq < best_sq) {
          best_sq = sq;
          best.closest = q;
          best.triangle = tri_index_[i];
        }
      }
      continue;
    }
    const double dl = box_sq_distance(nodes_[node.left], p);
    const double dr = box_sq_distance(nodes_[node.right], p);
    if (dl < dr) {
      if (dr < best_sq) stack[top++] = node.right;
      if (dl < best_sq) stack[top++] = node.left;
    } else {
      if (dl < best_sq) stack[top++] = node.left;
      if (dr < best_sq) stack[top++] = node.right;
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

std::tuple<double, Eigen::Vector3d, int> point_to_mesh_distance(const Eigen::Vector3d& p,
                                                                const TriangleMesh& mesh,
                                                                const AabbTree& tree) {
  if (mesh.empty() || mesh.triangles.empty()) {
    throw ContractViolation("point_to_mesh_distance: empty mesh");
  }
  const AabbTree::Hit hit = tree.closest(p);
  return {hit.distance, hit.closest, hit.triangle};
}

}  // namespace ds
