#pragma once

#include <optional>

#include "depthscan/aabb_tree.hpp"

namespace ds {

/// Translation + global scale (+ optional multiplicative back scale) mapping
/// a scan onto a reference. The transform of a scan vertex v is
///   t + c + scale * (m(v) - c)
/// where c is the scan vertex centroid and m applies back_scale to
/// back-tagged vertices about the centroid of the front-tagged vertices.
struct SimilarityFit {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;
  std::optional<double> back_scale;
  double final_error_mm = 0.0;
  int iterations = 0;

  void validate() const {
    if (scale <= 0.0) throw ContractViolation("SimilarityFit: scale must be positive");
    if (back_scale && *back_scale <= 0.0) {
      throw ContractViolation("SimilarityFit: back scale must be positive");
    }
  }
};

/// Correspondence search stopped improving while the error kept rising;
/// carries the best fit found before divergence.
class FitDivergenceError : public std::runtime_error {
 public:
  FitDivergenceError(const std::string& what, SimilarityFit best)
      : std::runtime_error(what), best_(std::move(best)) {}

  const SimilarityFit& best_fit() const { return best_; }

 private:
  SimilarityFit best_;
};

/// Applies the similarity transform described by `fit` to every scan vertex.
TriangleMesh apply_fit(const TriangleMesh& scan, const SimilarityFit& fit);

/// Mean of vertex-to-surface distances in both directions, in millimeters.
/// Exactly symmetric in its arguments. The two directional means carry equal
/// weight by default; weight_by_vertex_count pools all distances into one
/// mean instead, so the denser mesh dominates.
double bidirectional_error(const TriangleMesh& a, const TriangleMesh& b,
                           bool weight_by_vertex_count = false);

/// Alternating closest-point / closed-form similarity solve minimizing the
/// bidirectional error. With opt_back an extra scale on back-tagged vertices
/// (about the front centroid) is estimated. Stops when the error improves by
/// less than 1e-4 mm or after 50 iterations; never returns a fit worse than
/// the initialization. Throws FitDivergenceError after 5 consecutive error
/// increases.
SimilarityFit fit_similarity(const TriangleMesh& scan, const TriangleMesh& reference,
                             bool opt_back, const SimilarityFit& init = {});

}  // namespace ds
