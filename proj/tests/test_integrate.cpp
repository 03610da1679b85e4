#include "doctest.h"

#include "depthscan/integrate.hpp"
#include "depthscan/synth.hpp"
#include "test_support.hpp"

using namespace ds;

namespace {

double rms_after_optimal_scale(const DepthMap& got, const DepthMap& gt) {
  double num = 0.0, den = 0.0, mean = 0.0;
  long n = 0;
  for (int v = 0; v < got.height(); ++v) {
    for (int u = 0; u < got.width(); ++u) {
      if (!got.valid(u, v) || !gt.valid(u, v)) continue;
      num += got.values(u, v) * gt.values(u, v);
      den += gt.values(u, v) * gt.values(u, v);
      mean += gt.values(u, v);
      ++n;
    }
  }
  const double s = num / den;
  mean /= static_cast<double>(n);
  double sq = 0.0;
  for (int v = 0; v < got.height(); ++v) {
    for (int u = 0; u < got.width(); ++u) {
      if (!got.valid(u, v) || !gt.valid(u, v)) continue;
      const double e = got.values(u, v) - s * gt.values(u, v);
      sq += e * e;
    }
  }
  return std::sqrt(sq / n) / mean;
}

// Analytic normals of the height field z(x, y) = a x + b y, camera facing.
NormalMap tilted_plane_normals(int w, int h, double a, double b) {
  const Eigen::Vector3d n = Eigen::Vector3d(a, b, -1.0).normalized();
  NormalMap out = NormalMap::constant(w, h);
  out.values.fill(n);
  out.mask.fill(1);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("integrate");

TEST_CASE("plane target with a center anchor recovers the constant depth") {
  const int n = 24;
  const Camera cam = Camera::centered(n, n, 30.0);
  NormalMap target = NormalMap::constant(n, n);
  target.mask.fill(1);
  IntegratorConfig cfg;
  cfg.init_depth = 2.0;
  cfg.anchor = {{Eigen::Vector2i(n / 2, n / 2), 2.0}};
  cfg.max_iters = 500;

  const IntegrationResult result = integrate_depth(target, target.mask, cam, cfg);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      CHECK(std::abs(result.depth.values(u, v) - 2.0) < 1e-4);
    }
  }
  CHECK(result.components == 1);
}

TEST_CASE("normals of the generator depth give zero loss") {
  SyntheticScene scene;
  scene.kind = SceneKind::sphere_cap;
  const Camera cam = Camera::centered(64, 64, 120.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const NormalMap target = delta_normals(render.front, cam);
  const auto result = l1_normals_loss(render.front, target, cam);
  CHECK(result.value == 0.0);
}

TEST_CASE("sphere-cap depth is recovered to under 1% after optimal scale") {
  SyntheticScene scene;
  scene.kind = SceneKind::sphere_cap;
  scene.radius = 0.5;
  scene.cap_height = 1.0;
  const Camera cam = Camera::centered(64, 64, 120.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const NormalMap target = delta_normals(render.front, cam);

  const IntegrationResult result = integrate_depth(target, render.front.mask, cam, {});
  CHECK(rms_after_optimal_scale(result.depth, render.front) < 0.01);
}

TEST_CASE("empty mask raises the empty-domain error") {
  const Camera cam = Camera::centered(8, 8, 10.0);
  const NormalMap target = NormalMap::constant(8, 8);
  const Mask empty(8, 8, 0);
  CHECK_THROWS_AS(integrate_depth(target, empty, cam, {}), EmptyDomainError);
}

TEST_CASE("disconnected masks are optimized per component with independent gauges") {
  const int n = 24;
  const Camera cam = Camera::centered(n, n, 30.0);
  NormalMap target = NormalMap::constant(n, n);
  Mask mask(n, n, 0);
  for (int v = 2; v < 10; ++v) {
    for (int u = 2; u < 10; ++u) mask(u, v) = 1;       // left block
  }
  for (int v = 14; v < 22; ++v) {
    for (int u = 14; u < 22; ++u) mask(u, v) = 1;      // right block
  }
  target.mask = mask;

  IntegratorConfig cfg;
  cfg.max_iters = 500;

  const IntegrationResult result = integrate_depth(target, mask, cam, cfg);
  CHECK(result.components == 2);
  CHECK(result.final_loss < 1e-12);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      if (mask(u, v)) CHECK(std::abs(result.depth.values(u, v) - cfg.init_depth) < 1e-6);
    }
  }

  // Normals carry no inter-component constraint: rescaling one component's
  // depths leaves the loss unchanged, so the two gauges are independent.
  DepthMap mixed = result.depth;
  for (int v = 2; v < 10; ++v) {
    for (int u = 2; u < 10; ++u) mixed.values(u, v) *= 3.0;
  }
  const double before = l1_normals_loss(result.depth, target, cam).value;
  const double after = l1_normals_loss(mixed, target, cam).value;
  CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("integration is deterministic") {
  SyntheticScene scene;
  scene.kind = SceneKind::sphere_cap;
  const Camera cam = Camera::centered(32, 32, 60.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const NormalMap target = delta_normals(render.front, cam);
  IntegratorConfig cfg;
  cfg.max_iters = 300;

  const IntegrationResult a = integrate_depth(target, render.front.mask, cam, cfg);
  const IntegrationResult b = integrate_depth(target, render.front.mask, cam, cfg);
  CHECK(a.depth.values == b.depth.values);
  CHECK(a.final_loss == b.final_loss);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("best-so-far loss is monotone in the iteration budget") {
  SyntheticScene scene;
  scene.kind = SceneKind::sphere_cap;
  const Camera cam = Camera::centered(32, 32, 60.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const NormalMap target = delta_normals(render.front, cam);

  double previous = std::numeric_limits<double>::infinity();
  for (const int iters : {20, 100, 400, 1200}) {
    IntegratorConfig cfg;
    cfg.max_iters = iters;
    cfg.convergence_tol = 0.0;
    const IntegrationResult result = integrate_depth(target, render.front.mask, cam, cfg);
    CHECK(result.final_loss <= previous);
    previous = result.final_loss;
  }
}

TEST_CASE("recovered depth keeps the anchor and a scale-free loss") {
  SyntheticScene scene;
  scene.kind = SceneKind::sphere_cap;
  const Camera cam = Camera::centered(32, 32, 60.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const NormalMap target = delta_normals(render.front, cam);

  IntegratorConfig cfg;
  cfg.max_iters = 1000;
  cfg.anchor = {{Eigen::Vector2i(16, 16), 2.0}};
  const IntegrationResult result = integrate_depth(target, render.front.mask, cam, cfg);
  CHECK(result.depth.values(16, 16) == 2.0);

  const double base = l1_normals_loss(result.depth, target, cam).value;
  DepthMap scaled = result.depth;
  for (int v = 0; v < 32; ++v) {
    for (int u = 0; u < 32; ++u) scaled.values(u, v) *= 3.0;
  }
  const double after = l1_normals_loss(scaled, target, cam).value;
  CHECK(after == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("poisson: constant normals give identically zero depth") {
  NormalMap target = NormalMap::constant(16, 16);
  target.mask.fill(1);
  const DepthMap out = poisson_integrate_ortho(target, target.mask, 0.01);
  for (int v = 0; v < 16; ++v) {
    for (int u = 0; u < 16; ++u) {
      CHECK(out.valid(u, v));
      CHECK(std::abs(out.values(u, v)) < 1e-12);
    }
  }
}

TEST_CASE("poisson: tilted plane is recovered exactly up to a constant") {
  const int n = 32;
  const double pitch = 0.01;
  const double a = 0.3, b = -0.2;
  const NormalMap target = tilted_plane_normals(n, n, a, b);
  const DepthMap out = poisson_integrate_ortho(target, target.mask, pitch);

  // Ground truth plane, shifted to zero mean to match the solver gauge.
  Grid<double> gt(n, n, 0.0);
  double mean = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      gt(u, v) = a * u * pitch + b * v * pitch;
      mean += gt(u, v);
    }
  }
  mean /= n * n;
  double max_err = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      max_err = std::max(max_err, std::abs(out.values(u, v) - (gt(u, v) - mean)));
    }
  }
  CHECK(max_err < 1e-6);
}

TEST_CASE("poisson: low-slope sinusoid relief is recovered to 1e-3 of amplitude") {
  const int n = 64;
  const double pitch = 0.01;
  const double amplitude = 0.01;
  const double omega = 2.0 * M_PI / n;  // one period across the grid, per axis

  Grid<double> gt(n, n, 0.0);
  NormalMap target = NormalMap::constant(n, n);
  target.mask.fill(1);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      gt(u, v) = amplitude * std::sin(omega * u) * std::sin(omega * v);
      const double zx = amplitude * omega / pitch * std::cos(omega * u) * std::sin(omega * v);
      const double zy = amplitude * omega / pitch * std::sin(omega * u) * std::cos(omega * v);
      target.values(u, v) = Eigen::Vector3d(zx, zy, -1.0).normalized();
    }
  }

  const DepthMap out = poisson_integrate_ortho(target, target.mask, pitch);
  double mean = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) mean += gt(u, v);
  }
  mean /= n * n;
  double sq = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const double e = out.values(u, v) - (gt(u, v) - mean);
      sq += e * e;
    }
  }
  CHECK(std::sqrt(sq / (n * n)) < 1e-3 * amplitude);
}

TEST_CASE("poisson: near-silhouette normals raise a singularity error") {
  NormalMap target = NormalMap::constant(8, 8);
  target.mask.fill(1);
  target.values(3, 4) = Eigen::Vector3d(1.0, 0.0, -1e-4).normalized();
  try {
    poisson_integrate_ortho(target, target.mask, 0.01);
    FAIL("expected SingularityError");
  } catch (const SingularityError& e) {
    REQUIRE(e.pixels().size() == 1);
    CHECK(e.pixels().front() == std::pair<int, int>(3, 4));
  }
}

TEST_CASE("descent and poisson agree on a low-slope orthographic surface") {
  // Orthographic limit of the perspective integrator: long focal length with
  // the surface placed at z = f * pitch, so the pixel footprint equals pitch.
  const int n = 48;
  const double pitch = 0.01;
  const double focal = 4800.0;
  const double z0 = focal * pitch;  // 48 m
  const double amplitude = 0.02;
  const double omega = 2.0 * M_PI / n;

  NormalMap target = NormalMap::constant(n, n);
  target.mask.fill(1);
  Grid<double> relief(n, n, 0.0);
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      relief(u, v) = amplitude * std::sin(omega * u) * std::sin(omega * v);
      const double zx = amplitude * omega / pitch * std::cos(omega * u) * std::sin(omega * v);
      const double zy = amplitude * omega / pitch * std::sin(omega * u) * std::cos(omega * v);
      target.values(u, v) = Eigen::Vector3d(zx, zy, -1.0).normalized();
    }
  }

  const DepthMap poisson = poisson_integrate_ortho(target, target.mask, pitch);

  const Camera cam = Camera::centered(n, n, focal);
  IntegratorConfig cfg;
  cfg.init_depth = z0;
  const IntegrationResult descent = integrate_depth(target, target.mask, cam, cfg);

  // Align gauges (scale + offset) and compare to the relief span.
  double sxx = 0.0, sx = 0.0, sxy = 0.0, sy = 0.0;
  const double count = n * n;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const double x = descent.depth.values(u, v);
      const double y = poisson.values(u, v);
      sxx += x * x;
      sx += x;
      sxy += x * y;
      sy += y;
    }
  }
  const double det = sxx * count - sx * sx;
  const double a = (sxy * count - sx * sy) / det;
  const double b = (sxx * sy - sx * sxy) / det;

  double span_lo = 1e300, span_hi = -1e300, sq = 0.0;
  for (int v = 0; v < n; ++v) {
    for (int u = 0; u < n; ++u) {
      const double e = a * descent.depth.values(u, v) + b - poisson.values(u, v);
      sq += e * e;
      span_lo = std::min(span_lo, poisson.values(u, v));
      span_hi = std::max(span_hi, poisson.values(u, v));
    }
  }
  const double rms = std::sqrt(sq / count);
  CHECK(rms < 0.01 * (span_hi - span_lo));
}

TEST_SUITE_END();
