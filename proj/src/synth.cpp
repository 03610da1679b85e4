#include "depthscan/synth.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <random>

namespace ds {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Uniform double in [lo, hi) from the top 53 bits of the generator output.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + unit * (hi - lo);
}

struct HitSet {
  double front = 0.0, back = 0.0;
  Eigen::Vector3d front_normal_local = Eigen::Vector3d::Zero();
  bool any = false;
};

// Local-frame ray q(t) = t * a - b with t the camera-axis depth.
struct LocalRay {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
  Eigen::Vector3d at(double t) const { return t * a - b; }
};

bool inside_extent(const SyntheticScene& s, const Eigen::Vector3d& q) {
  if (s.extent_x > 0.0 && std::abs(q.x()) > s.extent_x) return false;
  if (s.extent_y > 0.0 && std::abs(q.y()) > s.extent_y) return false;
  return true;
}

HitSet intersect_plane(const SyntheticScene& s, const LocalRay& ray) {
  HitSet hits;
  const Eigen::Vector3d n(-s.slope_x, -s.slope_y, 1.0);  // z = sx*x + sy*y
  const double denom = n.dot(ray.a);
  if (std::abs(denom) < 1e-12) return hits;
  const double t = n.dot(ray.b) / denom;
  if (t <= 0.0) return hits;
  const Eigen::Vector3d q = ray.at(t);
  if (!inside_extent(s, q)) return hits;
  hits.any = true;
  hits.front = hits.back = t;
  hits.front_normal_local = n.normalized();
  return hits;
}

HitSet intersect_sphere_cap(const SyntheticScene& s, const LocalRay& ray) {
  HitSet hits;
  const double r = s.radius;
  // |t a - b|^2 = r^2
  const double qa = ray.a.squaredNorm();
  const double qb = -2.0 * ray.a.dot(ray.b);
  const double qc = ray.b.squaredNorm() - r * r;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return hits;
  const double sq = std::sqrt(disc);
  const double cap_limit = -r + s.cap_height;  // keep q.z <= cap_limit
  for (const double t : {(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)}) {
    if (t <= 0.0) continue;
    const Eigen::Vector3d q = ray.at(t);
    if (q.z() > cap_limit + 1e-12) continue;
    if (!hits.any) {
      hits.any = true;
      hits.front = hits.back = t;
      hits.front_normal_local = q / r;
    } else {
      hits.back = std::max(hits.back, t);
      if (t < hits.front) {
        hits.front = t;
        hits.front_normal_local = q / r;
      }
    }
  }
  return hits;
}

HitSet intersect_ellipsoid(const SyntheticScene& s, const LocalRay& ray) {
  HitSet hits;
  const Eigen::Vector3d inv = s.axes.cwiseInverse();
  const Eigen::Vector3d a = ray.a.cwiseProduct(inv);
  const Eigen::Vector3d b = ray.b.cwiseProduct(inv);
  const double qa = a.squaredNorm();
  const double qb = -2.0 * a.dot(b);
  const double qc = b.squaredNorm() - 1.0;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return hits;
  const double sq = std::sqrt(disc);
  const double t1 = (-qb - sq) / (2.0 * qa);
  const double t2 = (-qb + sq) / (2.0 * qa);
  if (t1 <= 0.0) return hits;
  hits.any = true;
  hits.front = t1;
  hits.back = t2;
  const Eigen::Vector3d q = ray.at(t1);
  hits.front_normal_local = q.cwiseProduct(inv.cwiseAbs2()).normalized();
  return hits;
}

HitSet intersect_sinusoid(const SyntheticScene& s, const LocalRay& ray) {
  HitSet hits;
  const double wx = 2.0 * kPi / s.period_x;
  const double wy = 2.0 * kPi / s.period_y;
  auto height = [&](double x, double y) { return s.amplitude * std::sin(wx * x) * std::sin(wy * y); };

  if (std::abs(ray.a.z()) < 1e-12) return hits;
  double t = ray.b.z() / ray.a.z();  // base-plane intersection
  // Newton iteration on g(t) = q.z(t) - height(q.x(t), q.y(t)).
  for (int it = 0; it < 64; ++it) {
    const Eigen::Vector3d q = ray.at(t);
    const double g = q.z() - height(q.x(), q.y());
    const double hx = s.amplitude * wx * std::cos(wx * q.x()) * std::sin(wy * q.y());
    const double hy = s.amplitude * wy * std::sin(wx * q.x()) * std::cos(wy * q.y());
    const double dg = ray.a.z() - hx * ray.a.x() - hy * ray.a.y();
    if (std::abs(dg) < 1e-12) return hits;
    const double t_next = t - g / dg;
    if (std::abs(t_next - t) < 1e-14 * std::max(1.0, std::abs(t))) {
      t = t_next;
      break;
    }
    t = t_next;
  }
  if (t <= 0.0) return hits;
  const Eigen::Vector3d q = ray.at(t);
  if (std::abs(q.z() - height(q.x(), q.y())) > 1e-9) return hits;  // no convergence
  if (!inside_extent(s, q)) return hits;
  const double hx = s.amplitude * wx * std::cos(wx * q.x()) * std::sin(wy * q.y());
  const double hy = s.amplitude * wy * std::sin(wx * q.x()) * std::cos(wy * q.y());
  hits.any = true;
  hits.front = hits.back = t;
  hits.front_normal_local = Eigen::Vector3d(-hx, -hy, 1.0).normalized();
  return hits;
}

double bounding_radius(const SyntheticScene& s) {
  switch (s.kind) {
    case SceneKind::sphere_cap:
      return s.radius;
    case SceneKind::ellipsoid:
      return s.axes.maxCoeff();
    case SceneKind::sinusoid_relief:
      return s.amplitude;
    default:
      return 0.0;  // planes validated by translation.z only
  }
}

}  // namespace

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "plane") return SceneKind::plane;
  if (name == "slanted_plane") return SceneKind::slanted_plane;
  if (name == "sphere_cap") return SceneKind::sphere_cap;
  if (name == "ellipsoid") return SceneKind::ellipsoid;
  if (name == "sinusoid_relief") return SceneKind::sinusoid_relief;
  throw ContractViolation("unknown scene kind: " + name);
}

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::plane: return "plane";
    case SceneKind::slanted_plane: return "slanted_plane";
    case SceneKind::sphere_cap: return "sphere_cap";
    case SceneKind::ellipsoid: return "ellipsoid";
    case SceneKind::sinusoid_relief: return "sinusoid_relief";
  }
  throw ContractViolation("unknown scene kind");
}

Eigen::Matrix3d SyntheticScene::rotation() const {
  const double rx = rotation_deg.x() * kPi / 180.0;
  const double ry = rotation_deg.y() * kPi / 180.0;
  const double rz = rotation_deg.z() * kPi / 180.0;
  // y first, then x, then z.
  return (Eigen::AngleAxisd(rz, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rx, Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(ry, Eigen::Vector3d::UnitY()))
      .toRotationMatrix();
}

void SyntheticScene::validate() const {
  if (translation.z() - bounding_radius(*this) <= 0.0) {
    throw ContractViolation("SyntheticScene: scene is not fully in front of the camera");
  }
  switch (kind) {
    case SceneKind::sphere_cap:
      if (radius <= 0.0 || cap_height <= 0.0 || cap_height > 2.0 * radius) {
        throw ContractViolation("SyntheticScene: need 0 < cap_height <= 2 * radius");
      }
      break;
    case SceneKind::ellipsoid:
      if (axes.minCoeff() <= 0.0) throw ContractViolation("SyntheticScene: ellipsoid axes > 0");
      break;
    case SceneKind::sinusoid_relief:
      if (amplitude < 0.0 || period_x <= 0.0 || period_y <= 0.0) {
        throw ContractViolation("SyntheticScene: invalid sinusoid parameters");
      }
      break;
    default:
      break;
  }
}

void SyntheticScene::sample_placement(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  translation = {uniform(rng, -0.5, 0.5), uniform(rng, 0.0, 0.4), uniform(rng, 1.5, 2.2)};
  rotation_deg = {uniform(rng, -9.0, 35.0), uniform(rng, -7.0, 7.0), uniform(rng, -2.0, 2.0)};
}

RenderResult render_depth_gt(const SyntheticScene& scene, const Camera& cam) {
  scene.validate();
  cam.validate();

  RenderResult out;
  out.front = DepthMap(Grid<double>(cam.width, cam.height, 0.0), Mask(cam.width, cam.height, 0));
  out.back = DepthMap(Grid<double>(cam.width, cam.height, 0.0), Mask(cam.width, cam.height, 0));
  out.normals_front = NormalMap::constant(cam.width, cam.height);

  const Eigen::Matrix3d rot = scene.rotation();
  const Eigen::Matrix3d rot_t = rot.transpose();
  const Eigen::Vector3d b = rot_t * scene.translation;
  const bool height_field = scene.kind == SceneKind::plane ||
                            scene.kind == SceneKind::slanted_plane ||
                            scene.kind == SceneKind::sinusoid_relief;

  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      LocalRay ray{rot_t * cam.ray(u, v), b};
      HitSet hits;
      switch (scene.kind) {
        case SceneKind::plane:
        case SceneKind::slanted_plane:
          hits = intersect_plane(scene, ray);
          break;
        case SceneKind::sphere_cap:
          hits = intersect_sphere_cap(scene, ray);
          break;
        case SceneKind::ellipsoid:
          hits = intersect_ellipsoid(scene, ray);
          break;
        case SceneKind::sinusoid_relief:
          hits = intersect_sinusoid(scene, ray);
          break;
      }
      if (!hits.any) continue;

      out.front.values(u, v) = hits.front;
      out.front.mask(u, v) = 1;
      if (!height_field) {
        out.back.values(u, v) = hits.back;
        out.back.mask(u, v) = 1;
      }
      Eigen::Vector3d n = rot * hits.front_normal_local;
      if (n.dot(cam.ray(u, v)) > 0.0) n = -n;  // face the camera
      out.normals_front.values(u, v) = n;
      out.normals_front.mask(u, v) = 1;
    }
  }
  return out;
}

}  // namespace ds
