#pragma once

#include <Eigen/Core>
#include <cmath>

#include "depthscan/camera.hpp"
#include "depthscan/grid.hpp"

namespace ds {

/// Normal reported for pixels where no surface normal can be derived.
inline const Eigen::Vector3d kConstantNormal{0.0, 0.0, -1.0};

/// Per-pixel depth in meters along the optical axis, positive in front of the
/// camera. Values at masked-out pixels are ignored by every operation.
struct DepthMap {
  Grid<double> values;
  Mask mask;

  DepthMap() = default;
  DepthMap(Grid<double> v, Mask m) : values(std::move(v)), mask(std::move(m)) {
    if (!values.same_size(mask)) throw ContractViolation("DepthMap: value/mask size mismatch");
  }

  static DepthMap constant(int width, int height, double depth) {
    return DepthMap(Grid<double>(width, height, depth), Mask(width, height, 1));
  }

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  bool valid(int u, int v) const { return mask(u, v) != 0; }

  /// Checks the positivity/finiteness invariant on the valid domain.
  void validate() const {
    for (int v = 0; v < height(); ++v) {
      for (int u = 0; u < width(); ++u) {
        if (!mask(u, v)) continue;
        const double d = values(u, v);
        if (!(d > 0.0) || !std::isfinite(d)) {
          throw ValidationError("DepthMap: non-positive or non-finite depth at (" +
                                std::to_string(u) + ", " + std::to_string(v) + ")");
        }
      }
    }
  }
};

/// Per-pixel unit normals, oriented toward the camera on valid pixels.
/// Masked-out pixels hold kConstantNormal.
struct NormalMap {
  Grid<Eigen::Vector3d> values;
  Mask mask;

  NormalMap() = default;
  NormalMap(Grid<Eigen::Vector3d> v, Mask m) : values(std::move(v)), mask(std::move(m)) {
    if (!values.same_size(mask)) throw ContractViolation("NormalMap: value/mask size mismatch");
  }

  static NormalMap constant(int width, int height) {
    return NormalMap(Grid<Eigen::Vector3d>(width, height, kConstantNormal),
                     Mask(width, height, 0));
  }

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  bool valid(int u, int v) const { return mask(u, v) != 0; }
};

/// Back-projected camera-frame points, one per pixel.
struct PointGrid {
  Grid<Eigen::Vector3d> points;
  Mask mask;

  int width() const { return points.width(); }
  int height() const { return points.height(); }
  bool valid(int u, int v) const { return mask(u, v) != 0; }
};

}  // namespace ds
