#pragma once

#include "depthscan/types.hpp"

namespace ds {

/// Lifts every valid pixel to a camera-frame 3D point: for pixel (u, v) with
/// depth z, the point is ((u - cx) * z / f, (v - cy) * z / f, z).
PointGrid backproject(const DepthMap& depth, const Camera& cam);

/// Converts a depth grid into per-pixel surface normals.
///
/// Tangents along the u and v grid directions are taken from back-projected
/// neighbor points: central differences when both neighbors are valid, one-sided
/// toward the single valid neighbor otherwise. The normal is the normalized
/// cross product, sign-flipped so it faces the camera (z <= 0). Pixels missing
/// a tangent in either direction, and all invalid pixels, get kConstantNormal.
/// Differentiation never reaches across the mask boundary.
NormalMap delta_normals(const DepthMap& depth, const Camera& cam);

/// Exact vector-Jacobian product of delta_normals: given a cotangent grid c,
/// returns d<c, delta_normals(depth)>/d(depth). The orientation flip is treated
/// as locally constant; pixels that produce the constant normal contribute zero.
Grid<double> delta_normals_vjp(const DepthMap& depth, const Camera& cam,
                               const Grid<Eigen::Vector3d>& cotangent);

}  // namespace ds
