#include "doctest.h"

#include <Eigen/Geometry>

#include "depthscan/mesh.hpp"
#include "depthscan/synth.hpp"
#include "test_support.hpp"

using namespace ds;

TEST_SUITE_BEGIN("mesh");

TEST_CASE("a fully valid 2x2 grid becomes one quad") {
  const Camera cam = Camera::centered(2, 2, 4.0);
  const DepthMap depth = DepthMap::constant(2, 2, 2.0);
  const TriangleMesh mesh = triangulate_depth(depth, cam);
  CHECK(mesh.vertex_count() == 4);
  CHECK(mesh.triangle_count() == 2);
}

TEST_CASE("a 3x3 grid with an invalid center has no full quads") {
  const Camera cam = Camera::centered(3, 3, 4.0);
  DepthMap depth = DepthMap::constant(3, 3, 2.0);
  depth.mask(1, 1) = 0;
  const TriangleMesh mesh = triangulate_depth(depth, cam);
  CHECK(mesh.vertex_count() == 8);
  CHECK(mesh.triangle_count() == 0);
}

TEST_CASE("vertices are emitted in row-major pixel order") {
  const Camera cam = Camera::centered(3, 2, 4.0);
  DepthMap depth = DepthMap::constant(3, 2, 1.0);
  depth.mask(1, 0) = 0;
  const TriangleMesh mesh = triangulate_depth(depth, cam);
  REQUIRE(mesh.vertex_count() == 5);
  // Pixel (0,0) first, then (2,0), then row 1 left to right.
  CHECK(mesh.vertices[0] == cam.unproject(0, 0, 1.0));
  CHECK(mesh.vertices[1] == cam.unproject(2, 0, 1.0));
  CHECK(mesh.vertices[2] == cam.unproject(0, 1, 1.0));
}

TEST_CASE("depth jumps beyond the ratio threshold leave holes") {
  const Camera cam = Camera::centered(4, 2, 6.0);
  DepthMap depth = DepthMap::constant(4, 2, 2.0);
  depth.values(2, 0) = depth.values(2, 1) = 2.5;  // 25% jump to columns 2,3
  depth.values(3, 0) = depth.values(3, 1) = 2.5;
  const TriangleMesh strict = triangulate_depth(depth, cam, 0.03);
  const TriangleMesh loose = triangulate_depth(depth, cam, 0.5);
  CHECK(strict.triangle_count() == 4);  // quad 1-2 skipped
  CHECK(loose.triangle_count() == 6);
}

TEST_CASE("front faces wind toward the camera") {
  const Camera cam = Camera::centered(8, 8, 10.0);
  const DepthMap depth = DepthMap::constant(8, 8, 2.0);
  const TriangleMesh mesh = triangulate_depth(depth, cam);
  for (const auto& tri : mesh.triangles) {
    const Eigen::Vector3d n = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                                  .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    CHECK(n.z() < 0.0);
  }
}

TEST_CASE("sphere-cap mesh area approaches the analytic cap area") {
  SyntheticScene scene;
  scene.kind = SceneKind::sphere_cap;
  scene.radius = 0.5;
  scene.cap_height = 0.1;
  scene.translation = {0.0, 0.0, 2.0};
  const Camera cam = Camera::centered(512, 512, 1200.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const TriangleMesh mesh = triangulate_depth(render.front, cam);
  const double analytic = 2.0 * M_PI * scene.radius * scene.cap_height;
  CHECK(surface_area(mesh) == doctest::Approx(analytic).epsilon(0.02));
}

TEST_CASE("fusing two parallel planes yields an open slab") {
  const int n = 6;
  ScanPair scan;
  scan.cam = Camera::centered(n, n, 8.0);
  scan.front = DepthMap::constant(n, n, 2.0);
  scan.back = DepthMap::constant(n, n, 2.2);
  const TriangleMesh mesh = fuse_scan(scan);
  CHECK(mesh.vertex_count() == 2 * n * n);
  CHECK(mesh.triangle_count() == 4 * (n - 1) * (n - 1));

  long front_tags = 0, back_tags = 0;
  for (const Side s : mesh.source) (s == Side::front ? front_tags : back_tags)++;
  CHECK(front_tags == n * n);
  CHECK(back_tags == n * n);

  // Back faces, after the winding flip, point away from the camera.
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector3d normal = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                                       .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    if (mesh.source[tri[0]] == Side::back) {
      CHECK(normal.z() > 0.0);
    } else {
      CHECK(normal.z() < 0.0);
    }
  }
}

TEST_CASE("identical front and back depths fuse into a zero-volume shell") {
  const int n = 8;
  ScanPair scan;
  scan.cam = Camera::centered(n, n, 10.0);
  scan.front = DepthMap::constant(n, n, 2.0);
  scan.back = scan.front;  // equality is allowed by the ordering invariant
  const TriangleMesh mesh = fuse_scan(scan);
  CHECK(std::abs(signed_volume(mesh)) < 1e-12);
}

TEST_CASE("front/back ordering violations are reported with pixels") {
  ScanPair scan;
  scan.cam = Camera::centered(4, 4, 6.0);
  scan.front = DepthMap::constant(4, 4, 2.0);
  scan.back = DepthMap::constant(4, 4, 2.2);
  scan.back.values(1, 2) = 1.9;
  CHECK_THROWS_WITH_AS(fuse_scan(scan),
                       doctest::Contains("(1,2)"), ValidationError);
}

TEST_CASE("fused ellipsoid bounding box matches the axis extents") {
  SyntheticScene scene;
  scene.kind = SceneKind::ellipsoid;
  scene.axes = {0.35, 0.5, 0.25};
  scene.translation = {0.0, 0.0, 2.0};
  const Camera cam = Camera::centered(256, 256, 300.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const TriangleMesh mesh = fuse_scan({render.front, render.back, cam});

  const auto [lo, hi] = bounding_box(mesh);
  const double footprint = scene.translation.z() / cam.focal_px;
  CHECK(std::abs(lo.x() + scene.axes.x()) < footprint);
  CHECK(std::abs(hi.x() - scene.axes.x()) < footprint);
  CHECK(std::abs(lo.y() + scene.axes.y()) < footprint);
  CHECK(std::abs(hi.y() - scene.axes.y()) < footprint);
  CHECK(std::abs(lo.z() - (2.0 - scene.axes.z())) < footprint);
  CHECK(std::abs(hi.z() - (2.0 + scene.axes.z())) < footprint);
}

TEST_CASE("back faces of a convex body point outward after the flip") {
  SyntheticScene scene;
  scene.kind = SceneKind::ellipsoid;
  scene.axes = {0.35, 0.5, 0.25};
  scene.translation = {0.0, 0.0, 2.0};
  const Camera cam = Camera::centered(128, 128, 150.0);
  const RenderResult render = render_depth_gt(scene, cam);
  const TriangleMesh mesh = fuse_scan({render.front, render.back, cam});
  const Eigen::Vector3d center(0.0, 0.0, 2.0);

  long back_total = 0, outward = 0;
  for (const auto& tri : mesh.triangles) {
    if (mesh.source[tri[0]] != Side::back) continue;
    ++back_total;
    const Eigen::Vector3d a = mesh.vertices[tri[0]];
    const Eigen::Vector3d n =
        (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
    const Eigen::Vector3d c = (a + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
    if (n.dot(c - center) > 0.0) ++outward;
  }
  REQUIRE(back_total > 0);
  CHECK(static_cast<double>(outward) / back_total >= 0.99);
}

TEST_CASE("scale_to_height is exact and invertible") {
  const Camera cam = Camera::centered(16, 16, 20.0);
  const DepthMap depth = DepthMap::constant(16, 16, 2.0);
  const TriangleMesh mesh = triangulate_depth(depth, cam);
  const double height = vertical_extent(mesh);

  SUBCASE("identity") {
    const auto [scaled, factor] = scale_to_height(mesh, height);
    CHECK(factor == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("doubling doubles pairwise distances") {
    const auto [scaled, factor] = scale_to_height(mesh, 2.0 * height);
    CHECK(factor == doctest::Approx(2.0).epsilon(1e-12));
    const double d0 = (mesh.vertices[10] - mesh.vertices[200]).norm();
    const double d1 = (scaled.vertices[10] - scaled.vertices[200]).norm();
    CHECK(d1 == doctest::Approx(2.0 * d0).epsilon(1e-12));
  }

  SUBCASE("round trip restores vertices") {
    const auto [scaled, factor] = scale_to_height(mesh, 1.75);
    const auto [restored, inverse] = scale_to_height(scaled, height);
    CHECK(factor * inverse == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
      CHECK((restored.vertices[i] - mesh.vertices[i]).norm() < 1e-12);
    }
  }
}

TEST_CASE("zero-height meshes cannot be height normalized") {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 0, 1}};
  mesh.triangles = {{0, 1, 2}};
  mesh.source = {Side::front, Side::front, Side::front};
  CHECK_THROWS_AS(scale_to_height(mesh, 1.0), ValidationError);
}

TEST_CASE("triangles only ever reference valid-pixel vertices") {
  std::mt19937_64 rng(2718);
  const Camera cam = Camera::centered(20, 20, 25.0);
  for (int instance = 0; instance < 20; ++instance) {
    DepthMap depth = test::random_smooth_depth(rng, 20, 20);
    for (int holes = 0; holes < 60; ++holes) {
      depth.mask(static_cast<int>(rng() % 20), static_cast<int>(rng() % 20)) = 0;
    }
    const TriangleMesh mesh = triangulate_depth(depth, cam);

    // Valid pixels in row-major order are exactly the emitted vertices.
    std::vector<Eigen::Vector3d> valid_points;
    for (int v = 0; v < 20; ++v) {
      for (int u = 0; u < 20; ++u) {
        if (depth.valid(u, v)) valid_points.push_back(cam.unproject(u, v, depth.values(u, v)));
      }
    }
    REQUIRE(mesh.vertex_count() == valid_points.size());
    for (const auto& tri : mesh.triangles) {
      for (const int i : tri) {
        REQUIRE(i >= 0);
        REQUIRE(i < static_cast<int>(mesh.vertex_count()));
        CHECK(mesh.vertices[i] == valid_points[i]);
      }
    }
  }
}

TEST_CASE("triangle count equals twice the fully valid quad count") {
  // Constant depth: no discontinuity pruning and no degenerate faces, so the
  // quad rule is directly enumerable.
  std::mt19937_64 rng(31415);
  const Camera cam = Camera::centered(16, 16, 20.0);
  for (int instance = 0; instance < 20; ++instance) {
    DepthMap depth = DepthMap::constant(16, 16, 2.0);
    for (int holes = 0; holes < 50; ++holes) {
      depth.mask(static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)) = 0;
    }
    long quads = 0;
    for (int v = 0; v + 1 < 16; ++v) {
      for (int u = 0; u + 1 < 16; ++u) {
        if (depth.valid(u, v) && depth.valid(u + 1, v) && depth.valid(u, v + 1) &&
            depth.valid(u + 1, v + 1)) {
          ++quads;
        }
      }
    }
    const TriangleMesh mesh = triangulate_depth(depth, cam);
    CHECK(mesh.triangle_count() == static_cast<std::size_t>(2 * quads));
  }
}

TEST_CASE("empty masks produce empty meshes") {
  const Camera cam = Camera::centered(4, 4, 6.0);
  DepthMap depth(Grid<double>(4, 4, 1.0), Mask(4, 4, 0));
  const TriangleMesh mesh = triangulate_depth(depth, cam);
  CHECK(mesh.empty());
}

TEST_SUITE_END();
