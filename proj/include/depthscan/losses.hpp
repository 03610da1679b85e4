#pragma once

#include <map>
#include <string>

#include "depthscan/normals.hpp"

namespace ds {

struct LossWeights {
  double lambda_d = 1.0;
  double lambda_n = 1.0;
  double lambda_msk = 1.0;

  void validate() const {
    if (lambda_d < 0.0 || lambda_n < 0.0 || lambda_msk < 0.0) {
      throw ContractViolation("LossWeights must be non-negative");
    }
    if (lambda_d == 0.0 && lambda_n == 0.0 && lambda_msk == 0.0) {
      throw ContractViolation("LossWeights must not all be zero");
    }
  }
};

/// Weighted total plus the raw (unweighted) value of each term.
struct LossReport {
  double total = 0.0;
  std::map<std::string, double> per_term;
  long valid_pixel_count = 0;
  LossWeights weights;
};

struct ScalarWithGrad {
  double value = 0.0;
  Grid<double> grad;
};

/// Mean per-pixel L1 distance between delta_normals(pred_depth) and target,
/// over the intersection of the two masks. The gradient with respect to depth
/// runs through the exact adjoint of delta_normals; the subgradient at exact
/// component ties is 0. Throws EmptyDomainError when no pixel is valid in both.
ScalarWithGrad l1_normals_loss(const DepthMap& pred_depth, const NormalMap& target,
                               const Camera& cam);

/// Mean absolute depth difference over the mask intersection, with the sign
/// field (divided by the pixel count) as gradient.
ScalarWithGrad l1_depth_loss(const DepthMap& pred, const DepthMap& target);

/// Mean binary cross-entropy over all pixels. Probabilities are clamped to
/// [1e-7, 1 - 1e-7]; the gradient is zero where the clamp is active.
ScalarWithGrad mask_bce_loss(const Grid<double>& pred_mask_prob, const Mask& target_mask);

/// Weighted sum of the front/back depth and normal terms plus the mask term.
/// The perceptual term on normals is reported as a structural zero.
LossReport full_loss(const DepthMap& front_pred, const NormalMap& front_normal_target,
                     const DepthMap& front_depth_target, const DepthMap& back_pred,
                     const NormalMap& back_normal_target, const DepthMap& back_depth_target,
                     const Grid<double>& mask_pred_prob, const Mask& mask_target,
                     const Camera& cam, const LossWeights& weights);

}  // namespace ds
