#include "depthscan/metrics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace ds {

namespace {

// Vertices not referenced by any triangle (valid pixels whose quads were all
// skipped) are not part of the surface and do not sample the metric.
std::vector<char> referenced_vertices(const TriangleMesh& mesh) {
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& tri : mesh.triangles) {
    used[tri[0]] = used[tri[1]] = used[tri[2]] = 1;
  }
  return used;
}

struct DirectionalSum {
  double sum = 0.0;
  long count = 0;
  double mean() const { return sum / static_cast<double>(count); }
};

DirectionalSum vertex_to_surface(const TriangleMesh& from, const std::vector<char>& from_used,
                                 const AabbTree& to_tree) {
  DirectionalSum out;
  for (std::size_t i = 0; i < from.vertices.size(); ++i) {
    if (!from_used[i]) continue;
    out.sum += to_tree.closest(from.vertices[i]).distance;
    ++out.count;
  }
  return out;
}

Eigen::Vector3d vertex_centroid(const TriangleMesh& mesh) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& v : mesh.vertices) sum += v;
  return sum / static_cast<double>(mesh.vertices.size());
}

struct Correspondence {
  Eigen::Vector3d scan_point;  // in untransformed scan coordinates
  Eigen::Vector3d target;
  bool back = false;
  double weight = 1.0;
};

// Vertices without a tag (hand-built or OBJ-loaded meshes) count as front.
Side side_of(const TriangleMesh& mesh, std::size_t i) {
  return i < mesh.source.size() ? mesh.source[i] : Side::front;
}

}  // namespace

TriangleMesh apply_fit(const TriangleMesh& scan, const SimilarityFit& fit) {
  fit.validate();
  const Eigen::Vector3d c = vertex_centroid(scan);

  Eigen::Vector3d front_c = Eigen::Vector3d::Zero();
  long n_front = 0;
  for (std::size_t i = 0; i < scan.vertices.size(); ++i) {
    if (side_of(scan, i) == Side::front) {
      front_c += scan.vertices[i];
      ++n_front;
    }
  }
  if (n_front > 0) front_c /= static_cast<double>(n_front);

  const double beta = fit.back_scale.value_or(1.0);
  TriangleMesh out = scan;
  for (std::size_t i = 0; i < out.vertices.size(); ++i) {
    Eigen::Vector3d m = out.vertices[i];
    if (side_of(scan, i) == Side::back) m = front_c + beta * (m - front_c);
    out.vertices[i] = fit.translation + c + fit.scale * (m - c);
  }
  return out;
}

double bidirectional_error(const TriangleMesh& a, const TriangleMesh& b,
                           bool weight_by_vertex_count) {
  if (a.empty() || b.empty()) throw ContractViolation("bidirectional_error: empty mesh");
  const AabbTree tree_a(a);
  const AabbTree tree_b(b);
  const DirectionalSum a_to_b = vertex_to_surface(a, referenced_vertices(a), tree_b);
  const DirectionalSum b_to_a = vertex_to_surface(b, referenced_vertices(b), tree_a);
  if (weight_by_vertex_count) {
    return 1000.0 * (a_to_b.sum + b_to_a.sum) / static_cast<double>(a_to_b.count + b_to_a.count);
  }
  return 1000.0 * 0.5 * (a_to_b.mean() + b_to_a.mean());
}

SimilarityFit fit_similarity(const TriangleMesh& scan, const TriangleMesh& reference,
                             bool opt_back, const SimilarityFit& init) {
  if (scan.empty() || reference.empty()) {
    throw ContractViolation("fit_similarity: empty mesh");
  }
  init.validate();

  long n_front = 0, n_back = 0;
  for (std::size_t i = 0; i < scan.vertices.size(); ++i) {
    (side_of(scan, i) == Side::front ? n_front : n_back)++;
  }
  if (opt_back && (n_front == 0 || n_back == 0)) {
    throw ContractViolation("fit_similarity: opt_back requires both front and back vertices");
  }

  const Eigen::Vector3d c = vertex_centroid(scan);
  Eigen::Vector3d front_c = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < scan.vertices.size(); ++i) {
    if (side_of(scan, i) == Side::front) front_c += scan.vertices[i];
  }
  front_c /= static_cast<double>(std::max(n_front, 1L));

  SimilarityFit fit = init;
  if (opt_back && !fit.back_scale) fit.back_scale = 1.0;
  if (!opt_back) fit.back_scale.reset();

  const AabbTree ref_tree(reference);
  const std::vector<char> scan_used = referenced_vertices(scan);
  const std::vector<char> ref_used = referenced_vertices(reference);
  long n_scan_used = 0, n_ref_used = 0;
  for (const char c : scan_used) n_scan_used += c;
  for (const char c : ref_used) n_ref_used += c;

  auto error_of = [&](const SimilarityFit& f) {
    const TriangleMesh transformed = apply_fit(scan, f);
    const AabbTree scan_tree(transformed);
    const double s_to_r = vertex_to_surface(transformed, scan_used, ref_tree).mean();
    const double r_to_s = vertex_to_surface(reference, ref_used, scan_tree).mean();
    return 1000.0 * 0.5 * (s_to_r + r_to_s);
  };

  double error = error_of(fit);
  fit.final_error_mm = error;
  fit.iterations = 0;
  SimilarityFit best = fit;

  int consecutive_increases = 0;
  for (int iter = 1; iter <= 50; ++iter) {
    const TriangleMesh transformed = apply_fit(scan, fit);
    const AabbTree scan_tree(transformed);

    // Both correspondence directions, mirroring the evaluation metric. The
    // surface-side point of the scan->reference direction is the scan vertex
    // itself; for reference->scan the closest point is pulled back to the
    // untransformed scan through the (single-tag) triangle's barycentrics.
    std::vector<Correspondence> pairs;
    pairs.reserve(scan.vertices.size() + reference.vertices.size());
    const double w_scan = 0.5 / static_cast<double>(n_scan_used);
    for (std::size_t i = 0; i < scan.vertices.size(); ++i) {
      if (!scan_used[i]) continue;
      Correspondence cp;
      cp.scan_point = scan.vertices[i];
      cp.target = ref_tree.closest(transformed.vertices[i]).closest;
      cp.back = side_of(scan, i) == Side::back;
      cp.weight = w_scan;
      pairs.push_back(cp);
    }
    const double w_ref = 0.5 / static_cast<double>(n_ref_used);
    for (std::size_t j = 0; j < reference.vertices.size(); ++j) {
      if (!ref_used[j]) continue;
      const Eigen::Vector3d& r = reference.vertices[j];
      const AabbTree::Hit hit = scan_tree.closest(r);
      const auto& tri = scan.triangles[hit.triangle];
      // Barycentric coordinates on the transformed triangle.
      const Eigen::Vector3d& a = transformed.vertices[tri[0]];
      const Eigen::Vector3d& b = transformed.vertices[tri[1]];
      const Eigen::Vector3d& d = transformed.vertices[tri[2]];
      const Eigen::Vector3d v0 = b - a, v1 = d - a, v2 = hit.closest - a;
      const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
      const double d20 = v2.dot(v0), d21 = v2.dot(v1);
      const double denom = d00 * d11 - d01 * d01;
      double lb = 0.0, lc = 0.0;
      if (denom > 0.0) {
        lb = (d11 * d20 - d01 * d21) / denom;
        lc = (d00 * d21 - d01 * d20) / denom;
      }
      const double la = 1.0 - lb - lc;
      Correspondence cp;
      cp.scan_point = la * scan.vertices[tri[0]] + lb * scan.vertices[tri[1]] +
                      lc * scan.vertices[tri[2]];
      cp.target = r;
      cp.back = side_of(scan, tri[0]) == Side::back;
      cp.weight = w_ref;
      pairs.push_back(cp);
    }

    // Closed-form weighted least squares. The transform is linear in
    // (t, alpha, gamma) with alpha = scale and gamma = scale * back_scale:
    //   front: t + c + alpha * (x - c)
    //   back:  t + c + alpha * (front_c - c) + gamma * (x - front_c)
    const int dim = opt_back ? 5 : 4;
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd row = Eigen::MatrixXd::Zero(3, dim);
    for (const auto& cp : pairs) {
      row.setZero();
      row.block<3, 3>(0, 0).setIdentity();
      Eigen::Vector3d rhs = cp.target - c;
      if (!cp.back) {
        row.col(3) = cp.scan_point - c;
      } else if (opt_back) {
        row.col(3) = front_c - c;
        row.col(4) = cp.scan_point - front_c;
      } else {
        row.col(3) = cp.scan_point - c;
      }
      ata += cp.weight * row.transpose() * row;
      atb += cp.weight * row.transpose() * rhs;
    }
    const Eigen::VectorXd sol = ata.ldlt().solve(atb);

    SimilarityFit next = fit;
    next.translation = sol.head<3>();
    next.scale = sol[3];
    if (opt_back) next.back_scale = sol[4] / sol[3];
    if (next.scale <= 0.0 || (next.back_scale && *next.back_scale <= 0.0)) {
      throw FitDivergenceError("fit_similarity: scale estimate collapsed", best);
    }

    const double next_error = error_of(next);
    next.final_error_mm = next_error;
    next.iterations = iter;

    if (next_error < best.final_error_mm) {
      best = next;
      best.iterations = iter;
    }

    const double improvement = error - next_error;
    fit = next;
    error = next_error;
    if (std::abs(improvement) < 1e-4) break;  // converged (mm)
    if (improvement < 0.0) {
      if (++consecutive_increases >= 5) {
        throw FitDivergenceError("fit_similarity: error increased for 5 consecutive iterations",
                                 best);
      }
    } else {
      consecutive_increases = 0;
    }
  }

  return best;
}

}  // namespace ds
