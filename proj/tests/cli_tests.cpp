// Integration tests for the command-line tool. Runs the binary given as
// argv[1] against scratch files under argv[2] (default: a temp directory).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "depthscan/io.hpp"
#include "depthscan/mesh.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using namespace ds;

static int g_pass = 0, g_fail = 0;

static void check(const std::string& name, bool ok) {
  std::printf("  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str());
  (ok ? g_pass : g_fail)++;
}

static std::string shquote(const fs::path& p) { return "\"" + p.string() + "\""; }

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

static RunResult run(const std::string& cli, const std::string& args, const fs::path& dir) {
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string command =
      shquote(cli) + " " + args + " > " + shquote(out_file) + " 2> " + shquote(err_file);
  const int status = std::system(command.c_str());

  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ostringstream o, e;
  o << std::ifstream(out_file).rdbuf();
  e << std::ifstream(err_file).rdbuf();
  result.out = o.str();
  result.err = e.str();
  return result;
}

static std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_tests <path-to-cli> [scratch-dir]\n";
    return 1;
  }
  const std::string cli = argv[1];
  const fs::path dir =
      argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "ds_cli_tests";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // --- exit codes and help ---
  check("--help exits 0", run(cli, "--help", dir).exit_code == 0);
  check("subcommand --help exits 0", run(cli, "synth --help", dir).exit_code == 0);
  check("unknown flag exits 2", run(cli, "synth --bogus 1", dir).exit_code == 2);
  check("missing subcommand exits 2", run(cli, "", dir).exit_code == 2);
  check("missing input file exits 2",
        run(cli,
            "depth2normals --depth " + shquote(dir / "nope.pfm") + " --mask " +
                shquote(dir / "nope.pgm") + " --out " + shquote(dir / "n.pfm"),
            dir).exit_code == 2);
  {
    std::ofstream(dir / "junk.pfm") << "not a pfm";
    const RunResult r = run(cli,
                            "depth2normals --depth " + shquote(dir / "junk.pfm") + " --mask " +
                                shquote(dir / "junk.pfm") + " --out " + shquote(dir / "n.pfm"),
                            dir);
    check("malformed input exits 2", r.exit_code == 2);
  }

  // --- synth: plane fills the mask ---
  {
    const RunResult r = run(cli,
                            "synth --kind plane --out " + shquote(dir / "plane") +
                                " --width 24 --height 24 --focal 30 --translate 0 0 2",
                            dir);
    check("synth plane exits 0", r.exit_code == 0);
    const Mask mask = read_pgm_mask(dir / "plane" / "mask_front.pgm");
    check("synth plane mask fully valid", count_valid(mask) == 24 * 24);
  }

  // --- synth determinism ---
  {
    const std::string flags = " --kind sphere_cap --seed 7 --sample-placement --width 48 "
                              "--height 48 --focal 90";
    run(cli, "synth" + flags + " --out " + shquote(dir / "det_a"), dir);
    run(cli, "synth" + flags + " --out " + shquote(dir / "det_b"), dir);
    bool identical = true;
    for (const char* f : {"depth_front.pfm", "depth_back.pfm", "normals_front.pfm",
                          "mask_front.pgm", "mask_back.pgm", "manifest.json"}) {
      identical = identical && read_all(dir / "det_a" / f) == read_all(dir / "det_b" / f);
    }
    check("synth outputs are byte-identical under a fixed seed", identical);
  }

  // --- manifest height matches the fused mesh extent ---
  {
    run(cli,
        "synth --kind ellipsoid --out " + shquote(dir / "ell") +
            " --width 64 --height 64 --focal 80 --translate 0 0 2",
        dir);
    const nlohmann::json manifest =
        nlohmann::json::parse(std::ifstream(dir / "ell" / "manifest.json"));
    run(cli,
        "depth2mesh --depth " + shquote(dir / "ell" / "depth_front.pfm") + " --mask " +
            shquote(dir / "ell" / "mask_front.pgm") + " --back " +
            shquote(dir / "ell" / "depth_back.pfm") + " --back-mask " +
            shquote(dir / "ell" / "mask_back.pgm") + " --manifest " +
            shquote(dir / "ell" / "manifest.json") + " --out " + shquote(dir / "ell.ply"),
        dir);
    const TriangleMesh mesh = read_ply(dir / "ell.ply");
    const double height = manifest.at("height").get<double>();
    check("manifest height equals the fused mesh vertical extent",
          std::abs(vertical_extent(mesh) - height) < 1e-12);
  }

  // --- eval identity prints 0.00 mm ---
  {
    const RunResult r =
        run(cli, "eval " + shquote(dir / "ell.ply") + " " + shquote(dir / "ell.ply"), dir);
    check("eval of a mesh against itself exits 0", r.exit_code == 0);
    check("eval identity prints 0.00 mm", r.out == "0.00 mm\n");
  }

  // --- eval --opt-back on a tagged two-sided scan ---
  {
    const RunResult r = run(
        cli, "eval " + shquote(dir / "ell.ply") + " " + shquote(dir / "ell.ply") + " --opt-back",
        dir);
    check("eval --opt-back on a tagged scan exits 0", r.exit_code == 0);
    check("eval --opt-back identity stays at 0.00 mm", r.out == "0.00 mm\n");
  }

  // --- eval on the 5 mm parallel-plane pair ---
  {
    auto plane = [&](double z, const fs::path& path) {
      TriangleMesh mesh;
      const int n = 100;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          mesh.vertices.push_back({i / 99.0, j / 99.0, z});
          mesh.source.push_back(Side::front);
        }
      }
      for (int j = 0; j + 1 < n; ++j) {
        for (int i = 0; i + 1 < n; ++i) {
          const int a = j * n + i;
          mesh.triangles.push_back({a, a + 1, a + n});
          mesh.triangles.push_back({a + 1, a + n + 1, a + n});
        }
      }
      write_ply(path, mesh);
    };
    plane(0.0, dir / "p0.ply");
    plane(0.005, dir / "p5.ply");
    const RunResult r = run(cli, "eval " + shquote(dir / "p0.ply") + " " + shquote(dir / "p5.ply"), dir);
    const double value = std::atof(r.out.c_str());
    check("eval of the 5 mm plane pair prints 5.00 +/- 0.05", std::abs(value - 5.0) <= 0.05);
  }

  // --- depth2normals + normals2depth --anchor round trip on a sphere cap ---
  {
    run(cli,
        "synth --kind sphere_cap --radius 0.5 --cap-height 0.35 --translate 0 0 2 --out " +
            shquote(dir / "cap") + " --width 64 --height 64 --focal 120",
        dir);
    run(cli,
        "depth2normals --depth " + shquote(dir / "cap" / "depth_front.pfm") + " --mask " +
            shquote(dir / "cap" / "mask_front.pgm") + " --manifest " +
            shquote(dir / "cap" / "manifest.json") + " --out " + shquote(dir / "cap_n.pfm"),
        dir);
    const RunResult r = run(cli,
                            "normals2depth --normals " + shquote(dir / "cap_n.pfm") + " --mask " +
                                shquote(dir / "cap" / "mask_front.pgm") + " --manifest " +
                                shquote(dir / "cap" / "manifest.json") + " --anchor 32 32 2.0 " +
                                "--gt " + shquote(dir / "cap" / "depth_front.pfm") + " --out " +
                                shquote(dir / "cap_d.pfm"),
                            dir);
    check("normals2depth exits 0", r.exit_code == 0);
    const std::size_t at = r.err.find("rms_after_scale=");
    double rms = 100.0;
    if (at != std::string::npos) rms = std::atof(r.err.c_str() + at + 16);
    check("reported rms_after_scale < 1%", rms < 1.0);
  }

  // --- eval report table ---
  {
    run(cli,
        "eval " + shquote(dir / "p0.ply") + " " + shquote(dir / "p5.ply") + " --subject 50002 " +
            "--report " + shquote(dir / "report.txt"),
        dir);
    const std::string report = read_all(dir / "report.txt");
    check("report table lists the subject id",
          report.find("50002") != std::string::npos &&
              report.find("Subject ID") != std::string::npos);
  }

  std::printf("\ncli_tests: %d passed, %d failed\n", g_pass, g_fail);
  return g_fail == 0 ? 0 : 1;
}
