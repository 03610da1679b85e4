// Command-line front end: synthesize ground truth, differentiate depth into
// normals, integrate normals back into depth, triangulate, and evaluate.
//
// Exit codes: 0 success, 1 numerical failure (non-convergence, singular
// input), 2 usage or file-format errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "depthscan/integrate.hpp"
#include "depthscan/io.hpp"
#include "depthscan/mesh.hpp"
#include "depthscan/metrics.hpp"
#include "depthscan/normals.hpp"
#include "depthscan/report.hpp"
#include "depthscan/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CameraFlags {
  double focal = 0.0;
  double cx = -1.0;
  double cy = -1.0;
  std::string manifest;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--focal", focal, "Focal length in pixels");
    cmd->add_option("--cx", cx, "Principal point x (default: image center)");
    cmd->add_option("--cy", cy, "Principal point y (default: image center)");
    cmd->add_option("--manifest", manifest,
                    "Scene manifest JSON providing the camera (overridden by --focal/--cx/--cy)");
  }

  ds::Camera resolve(int width, int height) const {
    ds::Camera cam(720.0, width / 2.0, height / 2.0, width, height);
    if (!manifest.empty()) {
      std::ifstream in(manifest);
      if (!in) throw ds::ValidationError("cannot open manifest " + manifest);
      const json j = json::parse(in);
      const auto& c = j.at("camera");
      cam = ds::Camera(c.at("focal_px"), c.at("cx"), c.at("cy"), c.at("width"), c.at("height"));
      if (cam.width != width || cam.height != height) {
        throw ds::ValidationError("manifest camera size does not match the input grid");
      }
    }
    if (focal > 0.0) cam.focal_px = focal;
    if (cx >= 0.0) cam.cx = cx;
    if (cy >= 0.0) cam.cy = cy;
    cam.validate();
    return cam;
  }
};

json camera_json(const ds::Camera& cam) {
  return {{"focal_px", cam.focal_px},
          {"cx", cam.cx},
          {"cy", cam.cy},
          {"width", cam.width},
          {"height", cam.height}};
}

int run_synth(const std::string& kind_name, std::uint64_t seed, const fs::path& out_dir,
              int width, int height, double focal, ds::SyntheticScene scene,
              bool sample_placement) {
  scene.kind = ds::scene_kind_from_string(kind_name);
  if (sample_placement) scene.sample_placement(seed);

  const ds::Camera cam = ds::Camera::centered(width, height, focal);
  const ds::RenderResult render = ds::render_depth_gt(scene, cam);

  fs::create_directories(out_dir);
  ds::write_depth(out_dir / "depth_front.pfm", out_dir / "mask_front.pgm", render.front);
  ds::write_depth(out_dir / "depth_back.pfm", out_dir / "mask_back.pgm", render.back);
  ds::write_pfm3(out_dir / "normals_front.pfm", render.normals_front.values,
                 "unit normals, camera frame, oriented toward the camera");

  // Vertical extent of the ground-truth scan (all back-projected vertices).
  double height_m = 0.0;
  {
    double lo = 1e300, hi = -1e300;
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        for (const ds::DepthMap* d : {&render.front, &render.back}) {
          if (!d->valid(u, v)) continue;
          const double y = cam.unproject(u, v, d->values(u, v)).y();
          lo = std::min(lo, y);
          hi = std::max(hi, y);
        }
      }
    }
    if (hi > lo) height_m = hi - lo;
  }

  json manifest = {
      {"kind", ds::to_string(scene.kind)},
      {"seed", seed},
      {"camera", camera_json(cam)},
      {"placement",
       {{"translation", {scene.translation.x(), scene.translation.y(), scene.translation.z()}},
        {"rotation_deg_yxz",
         {scene.rotation_deg.x(), scene.rotation_deg.y(), scene.rotation_deg.z()}}}},
      {"shape",
       {{"radius", scene.radius},
        {"cap_height", scene.cap_height},
        {"axes", {scene.axes.x(), scene.axes.y(), scene.axes.z()}},
        {"slope", {scene.slope_x, scene.slope_y}},
        {"amplitude", scene.amplitude},
        {"period", {scene.period_x, scene.period_y}},
        {"extent", {scene.extent_x, scene.extent_y}}}},
      {"height", height_m},
      {"files",
       {{"depth_front", "depth_front.pfm"},
        {"mask_front", "mask_front.pgm"},
        {"depth_back", "depth_back.pfm"},
        {"mask_back", "mask_back.pgm"},
        {"normals_front", "normals_front.pfm"}}}};
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";

  std::cerr << "synth: wrote " << ds::to_string(scene.kind) << " scene to " << out_dir.string()
            << " (" << ds::count_valid(render.front.mask) << " valid front pixels)\n";
  return 0;
}

int run_depth2normals(const fs::path& depth_path, const fs::path& mask_path,
                      const fs::path& out_path, const CameraFlags& camera) {
  const ds::DepthMap depth = ds::read_depth(depth_path, mask_path);
  const ds::Camera cam = camera.resolve(depth.width(), depth.height());
  const ds::NormalMap normals = ds::delta_normals(depth, cam);
  ds::write_pfm3(out_path, normals.values,
                 "unit normals, camera frame, oriented toward the camera");
  std::cerr << "depth2normals: wrote " << out_path.string() << "\n";
  return 0;
}

int run_normals2depth(const fs::path& normals_path, const fs::path& mask_path,
                      const fs::path& out_path, const CameraFlags& camera,
                      const std::string& method, double pitch, ds::IntegratorConfig cfg,
                      const std::vector<double>& anchor, const fs::path& gt_path) {
  ds::Mask mask = ds::read_pgm_mask(mask_path);
  ds::NormalMap normals(ds::read_pfm3(normals_path), mask);

  ds::DepthMap result;
  if (method == "poisson") {
    result = ds::poisson_integrate_ortho(normals, mask, pitch);
    std::cerr << "normals2depth: poisson solve on " << ds::count_valid(mask) << " pixels\n";
  } else {
    const ds::Camera cam = camera.resolve(mask.width(), mask.height());
    if (!anchor.empty()) {
      cfg.anchor = {{Eigen::Vector2i(static_cast<int>(anchor[0]), static_cast<int>(anchor[1])),
                     anchor[2]}};
    }
    const ds::IntegrationResult run = ds::integrate_depth(normals, mask, cam, cfg);
    result = run.depth;
    std::cerr << "normals2depth: loss=" << run.final_loss << " iterations=" << run.iterations
              << " components=" << run.components;
    if (!gt_path.empty()) {
      const ds::DepthMap gt =
          ds::read_depth(gt_path, mask_path);  // gt shares the evaluation mask
      double num = 0.0, den = 0.0, mean = 0.0;
      long n = 0;
      for (int v = 0; v < mask.height(); ++v) {
        for (int u = 0; u < mask.width(); ++u) {
          if (!mask(u, v) || !gt.valid(u, v)) continue;
          num += result.values(u, v) * gt.values(u, v);
          den += gt.values(u, v) * gt.values(u, v);
          mean += gt.values(u, v);
          ++n;
        }
      }
      const double s = num / den;
      mean /= static_cast<double>(n);
      double sq = 0.0;
      for (int v = 0; v < mask.height(); ++v) {
        for (int u = 0; u < mask.width(); ++u) {
          if (!mask(u, v) || !gt.valid(u, v)) continue;
          const double e = result.values(u, v) - s * gt.values(u, v);
          sq += e * e;
        }
      }
      std::cerr << " rms_after_scale=" << 100.0 * std::sqrt(sq / n) / mean << "%";
    }
    std::cerr << "\n";
  }

  ds::write_pfm(out_path, result.values, "depth in meters, positive along the camera +z axis");
  return 0;
}

int run_depth2mesh(const fs::path& depth_path, const fs::path& mask_path,
                   const fs::path& out_path, const CameraFlags& camera,
                   const fs::path& back_path, const fs::path& back_mask_path,
                   double discontinuity_ratio, double normalize_height) {
  const ds::DepthMap front = ds::read_depth(depth_path, mask_path);
  const ds::Camera cam = camera.resolve(front.width(), front.height());

  ds::TriangleMesh mesh;
  if (!back_path.empty()) {
    const ds::DepthMap back = ds::read_depth(back_path, back_mask_path);
    mesh = ds::fuse_scan({front, back, cam}, discontinuity_ratio);
  } else {
    mesh = ds::triangulate_depth(front, cam, discontinuity_ratio);
  }

  if (normalize_height > 0.0) {
    const auto [scaled, factor] = ds::scale_to_height(mesh, normalize_height);
    mesh = scaled;
    std::cerr << "depth2mesh: height normalized, scale factor " << factor << "\n";
  }
  ds::write_mesh(out_path, mesh);
  std::cerr << "depth2mesh: " << mesh.vertex_count() << " vertices, " << mesh.triangle_count()
            << " triangles -> " << out_path.string() << "\n";
  return 0;
}

int run_eval(const fs::path& scan_path, const fs::path& ref_path, bool fit, bool opt_back,
             bool weight_by_count, const std::string& subject, const fs::path& report_path,
             bool csv) {
  const ds::TriangleMesh scan = ds::read_mesh(scan_path);
  const ds::TriangleMesh reference = ds::read_mesh(ref_path);

  double error_mm = 0.0;
  if (fit || opt_back) {
    const ds::SimilarityFit result = ds::fit_similarity(scan, reference, opt_back);
    error_mm = result.final_error_mm;
    std::cerr << "eval: fit translation=(" << result.translation.x() << ", "
              << result.translation.y() << ", " << result.translation.z()
              << ") scale=" << result.scale;
    if (result.back_scale) std::cerr << " back_scale=" << *result.back_scale;
    std::cerr << " iterations=" << result.iterations << "\n";
    if (weight_by_count) {
      error_mm = ds::bidirectional_error(ds::apply_fit(scan, result), reference, true);
    }
  } else {
    error_mm = ds::bidirectional_error(scan, reference, weight_by_count);
  }

  std::printf("%.2f mm\n", error_mm);

  if (!report_path.empty()) {
    const std::vector<ds::ReportRow> rows = {{subject, {error_mm}}};
    std::ofstream(report_path) << ds::render_error_table({"Error (mm)"}, rows, csv);
    std::cerr << "eval: report written to " << report_path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-map geometry toolkit: synthetic scenes, normals, integration, meshes"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "Render an analytic scene to depth/normal/mask files");
  std::string kind = "sphere_cap";
  std::uint64_t seed = 0;
  std::string out_dir;
  int width = 96, height = 96;
  double focal = 180.0;
  ds::SyntheticScene scene;
  bool sample_placement = false;
  std::vector<double> translate, rotate, axes, period, extent, slope;
  synth->add_option("--kind", kind,
                    "plane | slanted_plane | sphere_cap | ellipsoid | sinusoid_relief");
  synth->add_option("--seed", seed, "Seed for sampled placement");
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--width", width, "Image width (pixels)");
  synth->add_option("--height", height, "Image height (pixels)");
  synth->add_option("--focal", focal, "Focal length (pixels)");
  synth->add_option("--radius", scene.radius, "Sphere radius (m)");
  synth->add_option("--cap-height", scene.cap_height, "Spherical cap height (m); 2r = full sphere");
  synth->add_option("--axes", axes, "Ellipsoid semi-axes ax ay az (m)")->expected(3);
  synth->add_option("--slope", slope, "Slanted plane gradient sx sy")->expected(2);
  synth->add_option("--amplitude", scene.amplitude, "Sinusoid amplitude (m)");
  synth->add_option("--period", period, "Sinusoid periods px py (m)")->expected(2);
  synth->add_option("--extent", extent, "Half extents ex ey (m); 0 = unbounded")->expected(2);
  synth->add_option("--translate", translate, "Scene translation x y z (m)")->expected(3);
  synth->add_option("--rotate", rotate, "Euler rotation x y z (deg, applied y-x-z)")->expected(3);
  synth->add_flag("--sample-placement", sample_placement,
                  "Draw the placement from the documented ranges using --seed");

  // --- depth2normals ---
  auto* d2n = app.add_subcommand("depth2normals", "Differentiate a depth map into normals");
  std::string d2n_depth, d2n_mask, d2n_out;
  CameraFlags d2n_cam;
  d2n->add_option("--depth", d2n_depth, "Input depth PFM")->required();
  d2n->add_option("--mask", d2n_mask, "Input mask PGM")->required();
  d2n->add_option("--out", d2n_out, "Output normals PFM")->required();
  d2n_cam.add_to(d2n);

  // --- normals2depth ---
  auto* n2d = app.add_subcommand("normals2depth", "Recover depth from normals");
  std::string n2d_normals, n2d_mask, n2d_out, n2d_method = "descent", n2d_gt;
  double n2d_pitch = 0.01;
  ds::IntegratorConfig cfg;
  std::vector<double> n2d_anchor;
  CameraFlags n2d_cam;
  n2d->add_option("--normals", n2d_normals, "Input normals PFM")->required();
  n2d->add_option("--mask", n2d_mask, "Input mask PGM")->required();
  n2d->add_option("--out", n2d_out, "Output depth PFM")->required();
  n2d->add_option("--method", n2d_method, "descent (perspective) | poisson (orthographic)");
  n2d->add_option("--pitch", n2d_pitch, "Pixel pitch in meters (poisson only)");
  n2d->add_option("--max-iters", cfg.max_iters, "Descent iteration budget");
  n2d->add_option("--step", cfg.step_size, "Initial step size");
  n2d->add_option("--decay", cfg.step_decay, "Step decay on rollback");
  n2d->add_option("--tol", cfg.convergence_tol, "Convergence tolerance (loss delta over 10 steps)");
  n2d->add_option("--init-depth", cfg.init_depth, "Constant initialization depth (m)");
  n2d->add_option("--anchor", n2d_anchor, "Anchor pixel and depth: u v depth")->expected(3);
  n2d->add_option("--gt", n2d_gt, "Ground-truth depth PFM; reports RMS after optimal scale");
  n2d_cam.add_to(n2d);

  // --- depth2mesh ---
  auto* d2m = app.add_subcommand("depth2mesh", "Triangulate depth map(s) into a mesh");
  std::string d2m_depth, d2m_mask, d2m_out, d2m_back, d2m_back_mask;
  double d2m_ratio = 0.03, d2m_height = 0.0;
  CameraFlags d2m_cam;
  d2m->add_option("--depth", d2m_depth, "Front depth PFM")->required();
  d2m->add_option("--mask", d2m_mask, "Front mask PGM")->required();
  d2m->add_option("--out", d2m_out, "Output mesh (.obj or .ply)")->required();
  d2m->add_option("--back", d2m_back, "Back depth PFM (fuses a two-sided scan)");
  d2m->add_option("--back-mask", d2m_back_mask, "Back mask PGM");
  d2m->add_option("--discontinuity-ratio", d2m_ratio,
                  "Max depth ratio across a quad before it becomes a hole");
  d2m->add_option("--normalize-height", d2m_height, "Scale the mesh to this vertical extent (m)");
  d2m_cam.add_to(d2m);

  // --- eval ---
  auto* eval = app.add_subcommand("eval", "Bidirectional mesh-to-mesh error (mm)");
  std::string eval_scan, eval_ref, eval_subject = "-", eval_report;
  bool eval_fit = false, eval_opt_back = false, eval_csv = false, eval_by_count = false;
  eval->add_option("scan", eval_scan, "Scan mesh (.obj/.ply)")->required();
  eval->add_option("reference", eval_ref, "Reference mesh (.obj/.ply)")->required();
  eval->add_flag("--fit", eval_fit, "Optimize translation and scale before measuring");
  eval->add_flag("--opt-back", eval_opt_back,
                 "Also optimize a free scale on back-tagged vertices (implies --fit)");
  eval->add_flag("--weight-by-count", eval_by_count,
                 "Pool both directions into one vertex-weighted mean instead of averaging "
                 "the two directional means");
  eval->add_option("--subject", eval_subject, "Subject id for the report row");
  eval->add_option("--report", eval_report, "Write a one-row error table to this file");
  eval->add_flag("--csv", eval_csv, "Report in CSV instead of aligned text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      if (translate.size() == 3) scene.translation = {translate[0], translate[1], translate[2]};
      if (rotate.size() == 3) scene.rotation_deg = {rotate[0], rotate[1], rotate[2]};
      if (axes.size() == 3) scene.axes = {axes[0], axes[1], axes[2]};
      if (slope.size() == 2) {
        scene.slope_x = slope[0];
        scene.slope_y = slope[1];
      }
      if (period.size() == 2) {
        scene.period_x = period[0];
        scene.period_y = period[1];
      }
      if (extent.size() == 2) {
        scene.extent_x = extent[0];
        scene.extent_y = extent[1];
      }
      return run_synth(kind, seed, out_dir, width, height, focal, scene, sample_placement);
    }
    if (d2n->parsed()) return run_depth2normals(d2n_depth, d2n_mask, d2n_out, d2n_cam);
    if (n2d->parsed()) {
      if (n2d_method != "descent" && n2d_method != "poisson") {
        throw ds::ContractViolation("unknown --method '" + n2d_method + "'");
      }
      return run_normals2depth(n2d_normals, n2d_mask, n2d_out, n2d_cam, n2d_method, n2d_pitch,
                               cfg, n2d_anchor, n2d_gt);
    }
    if (d2m->parsed()) {
      if (!d2m_back.empty() && d2m_back_mask.empty()) {
        throw ds::ContractViolation("--back requires --back-mask");
      }
      return run_depth2mesh(d2m_depth, d2m_mask, d2m_out, d2m_cam, d2m_back, d2m_back_mask,
                            d2m_ratio, d2m_height);
    }
    if (eval->parsed()) {
      return run_eval(eval_scan, eval_ref, eval_fit, eval_opt_back, eval_by_count, eval_subject,
                      eval_report, eval_csv);
    }
  } catch (const ds::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ds::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ds::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ds::EmptyDomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ds::FitDivergenceError& e) {
    std::cerr << "error: " << e.what() << " (best error "
              << e.best_fit().final_error_mm << " mm)\n";
    return 1;
  } catch (const ds::SingularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
