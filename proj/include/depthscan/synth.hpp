#pragma once

#include <cstdint>
#include <string>

#include "depthscan/types.hpp"

namespace ds {

enum class SceneKind { plane, slanted_plane, sphere_cap, ellipsoid, sinusoid_relief };

SceneKind scene_kind_from_string(const std::string& name);
std::string to_string(SceneKind kind);

/// Analytic test surface in a local frame, placed in front of the camera by a
/// translation and Euler rotation (degrees, applied in y-x-z order). Depths
/// are stored positive along the camera +z axis.
struct SyntheticScene {
  SceneKind kind = SceneKind::sphere_cap;

  // Shape parameters (meters), interpreted per kind.
  double radius = 0.5;        // sphere_cap
  double cap_height = 1.0;    // sphere_cap; 2 * radius means the full sphere
  Eigen::Vector3d axes{0.35, 0.5, 0.25};  // ellipsoid semi-axes
  double slope_x = 0.0, slope_y = 0.0;    // slanted_plane gradient
  double amplitude = 0.05;                // sinusoid_relief
  double period_x = 0.4, period_y = 0.4;  // sinusoid_relief (meters)
  double extent_x = 0.0, extent_y = 0.0;  // half-extents; <= 0 means unbounded

  // Placement of the local frame in the camera frame.
  Eigen::Vector3d translation{0.0, 0.0, 2.0};
  Eigen::Vector3d rotation_deg{0.0, 0.0, 0.0};  // Euler x, y, z

  /// Rotation matrix for the y-x-z application order.
  Eigen::Matrix3d rotation() const;

  void validate() const;

  /// Draws a placement from the ranges used for synthetic body renders:
  /// x in [-0.5, 0.5], y in [0, 0.4], z in [1.5, 2.2] (stored positive) and
  /// Euler degrees x in [-9, 35], y in [-7, 7], z in [-2, 2].
  void sample_placement(std::uint64_t seed);
};

struct RenderResult {
  DepthMap front;
  DepthMap back;
  NormalMap normals_front;  // analytic normals sampled at front hits
};

/// Per-pixel analytic ray-surface intersection: first hit gives front depth,
/// last hit gives back depth, misses get mask = false. Height-field kinds
/// (plane, slanted_plane, sinusoid_relief) have an empty back mask.
RenderResult render_depth_gt(const SyntheticScene& scene, const Camera& cam);

}  // namespace ds
