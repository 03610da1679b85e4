#include "depthscan/losses.hpp"

#include <algorithm>
#include <cmath>

namespace ds {

namespace {

constexpr double kBceEps = 1e-7;

inline double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

ScalarWithGrad l1_normals_loss(const DepthMap& pred_depth, const NormalMap& target,
                               const Camera& cam) {
  if (!pred_depth.values.same_size(target.values)) {
    throw ContractViolation("l1_normals_loss: prediction/target size mismatch");
  }
  const NormalMap pred = delta_normals(pred_depth, cam);

  long count = 0;
  for (int v = 0; v < pred.height(); ++v) {
    for (int u = 0; u < pred.width(); ++u) {
      if (pred_depth.valid(u, v) && target.valid(u, v)) ++count;
    }
  }
  if (count == 0) throw EmptyDomainError("l1_normals_loss: no pixel valid in both masks");

  double sum = 0.0;
  Grid<Eigen::Vector3d> cotangent(pred.width(), pred.height(), Eigen::Vector3d::Zero());
  const double inv_count = 1.0 / static_cast<double>(count);
  for (int v = 0; v < pred.height(); ++v) {
    for (int u = 0; u < pred.width(); ++u) {
      if (!pred_depth.valid(u, v) || !target.valid(u, v)) continue;
      const Eigen::Vector3d diff = pred.values(u, v) - target.values(u, v);
      sum += diff.cwiseAbs().sum();
      cotangent(u, v) = inv_count * Eigen::Vector3d(sign_or_zero(diff.x()),
                                                    sign_or_zero(diff.y()),
                                                    sign_or_zero(diff.z()));
    }
  }

  ScalarWithGrad out;
  out.value = sum * inv_count;
  out.grad = delta_normals_vjp(pred_depth, cam, cotangent);
  return out;
}

ScalarWithGrad l1_depth_loss(const DepthMap& pred, const DepthMap& target) {
  if (!pred.values.same_size(target.values)) {
    throw ContractViolation("l1_depth_loss: prediction/target size mismatch");
  }

  long count = 0;
  for (int v = 0; v < pred.height(); ++v) {
    for (int u = 0; u < pred.width(); ++u) {
      if (pred.valid(u, v) && target.valid(u, v)) ++count;
    }
  }
  if (count == 0) throw EmptyDomainError("l1_depth_loss: no pixel valid in both masks");

  ScalarWithGrad out;
  out.grad = Grid<double>(pred.width(), pred.height(), 0.0);
  const double inv_count = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  for (int v = 0; v < pred.height(); ++v) {
    for (int u = 0; u < pred.width(); ++u) {
      if (!pred.valid(u, v) || !target.valid(u, v)) continue;
      const double diff = pred.values(u, v) - target.values(u, v);
      sum += std::abs(diff);
      out.grad(u, v) = sign_or_zero(diff) * inv_count;
    }
  }
  out.value = sum * inv_count;
  return out;
}

ScalarWithGrad mask_bce_loss(const Grid<double>& pred_mask_prob, const Mask& target_mask) {
  if (!pred_mask_prob.same_size(target_mask)) {
    throw ContractViolation("mask_bce_loss: prediction/target size mismatch");
  }

  ScalarWithGrad out;
  out.grad = Grid<double>(pred_mask_prob.width(), pred_mask_prob.height(), 0.0);
  const double n = static_cast<double>(pred_mask_prob.size());
  double sum = 0.0;
  for (int v = 0; v < target_mask.height(); ++v) {
    for (int u = 0; u < target_mask.width(); ++u) {
      const double raw = pred_mask_prob(u, v);
      const double p = std::clamp(raw, kBceEps, 1.0 - kBceEps);
      const double t = target_mask(u, v) ? 1.0 : 0.0;
      sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
      if (raw > kBceEps && raw < 1.0 - kBceEps) {
        out.grad(u, v) = (-t / p + (1.0 - t) / (1.0 - p)) / n;
      }
    }
  }
  out.value = sum / n;
  return out;
}

LossReport full_loss(const DepthMap& front_pred, const NormalMap& front_normal_target,
                     const DepthMap& front_depth_target, const DepthMap& back_pred,
                     const NormalMap& back_normal_target, const DepthMap& back_depth_target,
                     const Grid<double>& mask_pred_prob, const Mask& mask_target,
                     const Camera& cam, const LossWeights& weights) {
  weights.validate();

  LossReport report;
  report.weights = weights;

  const auto depth_f = l1_depth_loss(front_pred, front_depth_target);
  const auto depth_b = l1_depth_loss(back_pred, back_depth_target);
  const auto normals_f = l1_normals_loss(front_pred, front_normal_target, cam);
  const auto normals_b = l1_normals_loss(back_pred, back_normal_target, cam);
  const auto bce = mask_bce_loss(mask_pred_prob, mask_target);

  report.per_term["depth_front"] = depth_f.value;
  report.per_term["depth_back"] = depth_b.value;
  report.per_term["normals_front"] = normals_f.value;
  report.per_term["normals_back"] = normals_b.value;
  report.per_term["mask_bce"] = bce.value;
  report.per_term["vgg_normals"] = 0.0;  // structural placeholder, never computed

  for (int v = 0; v < front_pred.height(); ++v) {
    for (int u = 0; u < front_pred.width(); ++u) {
      if (front_pred.valid(u, v) && front_normal_target.valid(u, v)) ++report.valid_pixel_count;
      if (back_pred.valid(u, v) && back_normal_target.valid(u, v)) ++report.valid_pixel_count;
    }
  }

  report.total = weights.lambda_d * (depth_f.value + depth_b.value) +
                 weights.lambda_n * (normals_f.value + normals_b.value) +
                 weights.lambda_msk * bce.value;
  return report;
}

}  // namespace ds
