#pragma once

#include <Eigen/Core>

#include "depthscan/errors.hpp"

namespace ds {

/// Pinhole intrinsics. The camera sits at the origin of a right-handed frame
/// and looks along +z; x points right (u), y points down (v). Depth is the
/// positive distance along the optical axis.
struct Camera {
  double focal_px = 720.0;
  double cx = 360.0;
  double cy = 480.0;
  int width = 720;
  int height = 960;

  Camera() = default;

  Camera(double focal, double cx_, double cy_, int w, int h)
      : focal_px(focal), cx(cx_), cy(cy_), width(w), height(h) {
    validate();
  }

  /// Camera with the principal point at the image center.
  static Camera centered(int w, int h, double focal) {
    return Camera(focal, w / 2.0, h / 2.0, w, h);
  }

  void validate() const {
    if (focal_px <= 0.0) throw ContractViolation("Camera: focal length must be positive");
    if (width <= 0 || height <= 0) throw ContractViolation("Camera: image size must be positive");
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
      throw ContractViolation("Camera: principal point outside the image");
    }
  }

  /// Direction through pixel (u, v), scaled so that z == 1. A point at depth d
  /// along this pixel's ray is d * ray(u, v).
  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / focal_px, (v - cy) / focal_px, 1.0};
  }

  Eigen::Vector3d unproject(double u, double v, double depth) const {
    return depth * ray(u, v);
  }

  /// Pixel coordinates of a camera-frame point (requires p.z > 0).
  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {focal_px * p.x() / p.z() + cx, focal_px * p.y() / p.z() + cy};
  }
};

}  // namespace ds
