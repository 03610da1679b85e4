#pragma once

#include <optional>
#include <utility>

#include "depthscan/losses.hpp"

namespace ds {

struct IntegratorConfig {
  int max_iters = 20000;
  double step_size = 0.1;
  double step_decay = 0.98;       // multiplicative, applied on rollback
  double convergence_tol = 1e-12; // loss decrease over 10 iterations
  double init_depth = 2.0;
  // Pixel whose depth is held fixed, pinning the scale gauge. Defaults to the
  // mask centroid pixel at init_depth.
  std::optional<std::pair<Eigen::Vector2i, double>> anchor;

  void validate() const {
    if (max_iters < 1) throw ContractViolation("IntegratorConfig: max_iters >= 1 required");
    if (step_size <= 0.0) throw ContractViolation("IntegratorConfig: step_size must be positive");
    if (step_decay <= 0.0 || step_decay > 1.0) {
      throw ContractViolation("IntegratorConfig: step_decay must lie in (0, 1]");
    }
    if (init_depth <= 0.0) throw ContractViolation("IntegratorConfig: init_depth must be positive");
  }
};

struct IntegrationResult {
  DepthMap depth;
  double final_loss = 0.0;
  int iterations = 0;
  // Connected components of the mask; each is optimized under its own anchor,
  // so scale gauges across components are independent.
  int components = 0;
};

/// Recovers depth from target normals by minimizing the L1 normals loss with
/// gradient descent (momentum 0.9, step decay on rollback) from a constant
/// init. The best-so-far loss never increases; anchored pixels keep their
/// depth exactly. Throws EmptyDomainError when the mask is empty.
IntegrationResult integrate_depth(const NormalMap& target, const Mask& mask, const Camera& cam,
                                  const IntegratorConfig& cfg);

/// Classical orthographic baseline: converts normals to the gradient field
/// p = -nx/nz, q = -ny/nz and solves the masked least-squares Poisson system
/// on a grid with the given pixel pitch (meters). The gauge is fixed by
/// zero-mean depth (per connected component). Throws SingularityError when
/// |nz| < 1e-3 anywhere on the valid domain.
DepthMap poisson_integrate_ortho(const NormalMap& target, const Mask& mask, double pixel_pitch);

}  // namespace ds
