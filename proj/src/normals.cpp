#include "depthscan/normals.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace ds {

namespace {

// Cross products degenerate below this squared norm; such pixels fall back to
// the constant normal and carry no gradient.
constexpr double kMinCrossSqNorm = 1e-60;

// Difference stencil at one pixel: endpoint pixel indices along u and v.
// (a, b) means tangent = P(a) - P(b); a == b marks a missing tangent.
struct Stencil {
  int ua, ub;  // u coordinates of the u-tangent endpoints (same row v)
  int va, vb;  // v coordinates of the v-tangent endpoints (same column u)
  bool ok;     // both tangents available
};

inline Stencil make_stencil(const Mask& mask, int u, int v) {
  Stencil s{u, u, v, v, false};
  const bool left = u > 0 && mask(u - 1, v);
  const bool right = u + 1 < mask.width() && mask(u + 1, v);
  const bool up = v > 0 && mask(u, v - 1);
  const bool down = v + 1 < mask.height() && mask(u, v + 1);

  if (right) s.ua = u + 1;
  if (left) s.ub = u - 1;
  if (down) s.va = v + 1;
  if (up) s.vb = v - 1;
  s.ok = (s.ua != s.ub) && (s.va != s.vb);
  return s;
}

inline void require_same_size(const DepthMap& depth, const Camera& cam) {
  if (!depth.values.same_size(cam.width, cam.height)) {
    throw ContractViolation("depth grid does not match camera dimensions");
  }
  if (!depth.values.same_size(depth.mask)) {
    throw ContractViolation("depth value/mask size mismatch");
  }
}

}  // namespace

PointGrid backproject(const DepthMap& depth, const Camera& cam) {
  require_same_size(depth, cam);

  PointGrid out;
  out.points = Grid<Eigen::Vector3d>(cam.width, cam.height, Eigen::Vector3d::Zero());
  out.mask = depth.mask;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      if (!depth.valid(u, v)) continue;
      out.points(u, v) = cam.unproject(u, v, depth.values(u, v));
    }
  }
  return out;
}

NormalMap delta_normals(const DepthMap& depth, const Camera& cam) {
  require_same_size(depth, cam);

  NormalMap out;
  out.values = Grid<Eigen::Vector3d>(cam.width, cam.height, kConstantNormal);
  out.mask = depth.mask;

  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      if (!depth.valid(u, v)) continue;
      const Stencil s = make_stencil(depth.mask, u, v);
      if (!s.ok) continue;  // isolated in u or v: constant normal

      const Eigen::Vector3d tu = cam.unproject(s.ua, v, depth.values(s.ua, v)) -
                                 cam.unproject(s.ub, v, depth.values(s.ub, v));
      const Eigen::Vector3d tv = cam.unproject(u, s.va, depth.values(u, s.va)) -
                                 cam.unproject(u, s.vb, depth.values(u, s.vb));
      const Eigen::Vector3d w = tu.cross(tv);
      const double sq = w.squaredNorm();
      if (sq < kMinCrossSqNorm) continue;

      Eigen::Vector3d n = w / std::sqrt(sq);
      if (n.z() > 0.0) n = -n;
      out.values(u, v) = n;
    }
  }
  return out;
}

Grid<double> delta_normals_vjp(const DepthMap& depth, const Camera& cam,
                               const Grid<Eigen::Vector3d>& cotangent) {
  require_same_size(depth, cam);
  if (!cotangent.same_size(depth.values)) {
    throw ContractViolation("cotangent grid does not match depth dimensions");
  }

  Grid<double> grad(cam.width, cam.height, 0.0);

  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      if (!depth.valid(u, v)) continue;
      const Stencil s = make_stencil(depth.mask, u, v);
      if (!s.ok) continue;

      const Eigen::Vector3d tu = cam.unproject(s.ua, v, depth.values(s.ua, v)) -
                                 cam.unproject(s.ub, v, depth.values(s.ub, v));
      const Eigen::Vector3d tv = cam.unproject(u, s.va, depth.values(u, s.va)) -
                                 cam.unproject(u, s.vb, depth.values(u, s.vb));
      const Eigen::Vector3d w = tu.cross(tv);
      const double sq = w.squaredNorm();
      if (sq < kMinCrossSqNorm) continue;

      const double norm = std::sqrt(sq);
      const Eigen::Vector3d that = w / norm;
      const double sign = (that.z() > 0.0) ? -1.0 : 1.0;

      // d<c, sign * w/|w|> / dw = sign * (c - (c . what) what) / |w|
      const Eigen::Vector3d& c = cotangent(u, v);
      const Eigen::Vector3d gw = sign / norm * (c - c.dot(that) * that);

      // w = tu x tv  =>  g_tu = tv x gw,  g_tv = gw x tu
      const Eigen::Vector3d gtu = tv.cross(gw);
      const Eigen::Vector3d gtv = gw.cross(tu);

      // Each tangent endpoint P(p) = depth(p) * ray(p), so dP/d(depth) = ray.
      grad(s.ua, v) += cam.ray(s.ua, v).dot(gtu);
      grad(s.ub, v) -= cam.ray(s.ub, v).dot(gtu);
      grad(u, s.va) += cam.ray(u, s.va).dot(gtv);
      grad(u, s.vb) -= cam.ray(u, s.vb).dot(gtv);
    }
  }
  return grad;
}

}  // namespace ds
