#include <cmath>
#include <regex>

#include "cli_harness.hpp"
#include "doctest.h"
#include "json.hpp"
#include "synthetic.hpp"
#include "vseg/imageio.hpp"
#include "vseg/outputs.hpp"

using namespace vseg;
using namespace vseg::testing;

namespace {

// All (x1,y1,x2,y2) quiver segments of a field SVG.
std::vector<std::array<double, 4>> svg_lines(const std::string& svg) {
  std::vector<std::array<double, 4>> out;
  const std::regex re(R"re(<line x1="([^"]+)" y1="([^"]+)" x2="([^"]+)" y2="([^"]+)"/>)re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back({std::stod((*it)[1]), std::stod((*it)[2]), std::stod((*it)[3]), std::stod((*it)[4])});
  return out;
}

std::vector<std::string> grid_polylines(const std::string& svg) {
  std::vector<std::string> out;
  const std::regex re(R"re(<polyline class="grid" points="([^"]*)")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back((*it)[1]);
  return out;
}

}  // namespace

TEST_CASE("segment writes the run artefacts") {
  TempDir tmp("seg");
  save_pgm_file(synthetic::disk(48, 14.0), tmp / "disk.pgm", true);
  const auto r = run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "out", "--iterations", "40",
                          "--vertices", "24", "--snapshot-every", "20"});
  REQUIRE(r.code == 0);
  const auto contour = lines(slurp(tmp / "out/contour.csv"));
  CHECK(contour.size() == 24);
  CHECK(std::regex_match(contour[0], std::regex(R"([-0-9.e+]+,[-0-9.e+]+)")));
  const auto energy = lines(slurp(tmp / "out/energy.csv"));
  CHECK(energy.front() == "iter,total,reg,loss,alpha");
  CHECK(energy.size() == 42);
  const std::string svg = slurp(tmp / "out/overlay.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("width=\"48px\"") != std::string::npos);
  CHECK(svg.find("class=\"final\"") != std::string::npos);
  CHECK(svg.find("class=\"snapshot\"") != std::string::npos);

  const auto m = nlohmann::json::parse(slurp(tmp / "out/manifest.json"));
  for (const char* key : {"sigma_var", "sigma_v", "nsteps", "lambda_loss", "loss", "threshold_rel", "smooth_sigma",
                          "mass_mode", "ellipse_k", "n_vertices", "adam_lr", "adam_beta1", "adam_beta2", "adam_eps",
                          "iterations", "snapshot_every", "seed", "input", "outdir", "version", "duration_s"})
    CHECK_MESSAGE(m.contains(key), key);
  CHECK(m["sigma_v"].get<double>() == doctest::Approx(0.2 * 48));
  CHECK(m["sigma_var"].get<double>() == doctest::Approx(0.1 * 48));
  CHECK(m["iterations"].get<int>() == 40);
  CHECK(m["n_vertices"].get<int>() == 24);
  for (const auto& [k, v] : m.items()) CHECK_MESSAGE(!v.is_object(), k);
}

TEST_CASE("segment is reproducible byte for byte") {
  TempDir tmp("repro");
  save_pgm_file(synthetic::disk(40, 12.0), tmp / "disk.pgm", false);
  for (const char* out : {"a", "b"})
    REQUIRE(run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / out, "--iterations", "30"}).code == 0);
  CHECK(slurp(tmp / "a/contour.csv") == slurp(tmp / "b/contour.csv"));
  CHECK(slurp(tmp / "a/energy.csv") == slurp(tmp / "b/energy.csv"));
}

TEST_CASE("segment error paths and exit codes") {
  TempDir tmp("err");
  save_pgm_file(Image(32, 32, 0.5), tmp / "constant.pgm", true);
  save_pgm_file(synthetic::disk(32, 9.0), tmp / "disk.pgm", true);

  const auto flat = run_cli({"segment", "--input", tmp / "constant.pgm", "--outdir", tmp / "o"});
  CHECK(flat.code == 2);
  CHECK(flat.err.find("empty gradient field") != std::string::npos);
  CHECK(std::count(flat.err.begin(), flat.err.end(), '\n') == 1);

  CHECK(run_cli({"segment", "--outdir", tmp / "o"}).code == 1);
  CHECK(run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "o", "--threshold", "2"}).code == 1);
  CHECK(run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "o", "--mass-mode", "x"}).code == 1);
  CHECK(run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "o", "--bogus", "1"}).code == 1);
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"segment", "--input", tmp / "missing.pgm", "--outdir", tmp / "o"}).code == 2);

  std::ofstream(tmp / "bad.pgm") << "P3\n1 1\n255\n0 0 0\n";
  const auto bad = run_cli({"segment", "--input", tmp / "bad.pgm", "--outdir", tmp / "o"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("format") != std::string::npos);

  const auto boom = run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "o", "--lr", "1e200",
                             "--iterations", "3"});
  CHECK(boom.code == 3);
  CHECK(boom.err.find("optimize") != std::string::npos);
}

TEST_CASE("configuration precedence: defaults < file < flags") {
  TempDir tmp("cfg");
  save_pgm_file(synthetic::disk(32, 9.0), tmp / "disk.pgm", true);
  std::ofstream(tmp / "cfg.json") << R"({"iterations": 7, "n_vertices": 16, "lambda_loss": 0.5, "loss": "L0"})";
  REQUIRE(run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "o", "--config", tmp / "cfg.json",
                   "--vertices", "20"})
              .code == 0);
  const auto m = nlohmann::json::parse(slurp(tmp / "o/manifest.json"));
  CHECK(m["iterations"] == 7);
  CHECK(m["n_vertices"] == 20);
  CHECK(m["lambda_loss"] == 0.5);
  CHECK(m["loss"] == "L0");
  CHECK(m["threshold_rel"] == 0.2);

  std::ofstream(tmp / "typo.json") << R"({"iteration": 7})";
  CHECK(run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "o", "--config", tmp / "typo.json"})
            .code == 1);
}

TEST_CASE("config JSON round trip") {
  SegmentationConfig c;
  c.sigma_var = 3.5;
  c.n_vertices = 33;
  c.mass_mode = MassMode::Magnitude;
  SegmentationConfig d;
  cli::apply_config_json(d, cli::config_json(c));
  CHECK(cli::config_json(d) == cli::config_json(c));
  CHECK(d.sigma_var == 3.5);
  CHECK_FALSE(d.sigma_v.has_value());
}

TEST_CASE("gradfield subcommand") {
  TempDir tmp("grad");
  save_pgm_file(synthetic::ramp(20, 12), tmp / "ramp.pgm", false);
  REQUIRE(run_cli({"gradfield", "--input", tmp / "ramp.pgm", "--outdir", tmp / "r", "--threshold", "0",
                   "--smooth-sigma", "0"})
              .code == 0);
  CHECK(lines(slurp(tmp / "r/field.csv")).size() == 18u * 10u);

  // Quadratic profile on a single interior row: the steepest pixel is unique.
  Image quad(9, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 9; ++x) quad(x, y) = x * x / 64.0;
  save_pgm_file(quad, tmp / "quad.pgm", true);
  REQUIRE(run_cli({"gradfield", "--input", tmp / "quad.pgm", "--outdir", tmp / "s", "--threshold", "1",
                   "--smooth-sigma", "0"})
              .code == 0);
  CHECK(lines(slurp(tmp / "s/field.csv")).size() == 1);

  save_pgm_file(synthetic::disk(64, 20.0), tmp / "disk.pgm", true);
  REQUIRE(run_cli({"gradfield", "--input", tmp / "disk.pgm", "--outdir", tmp / "d", "--threshold", "0.3"}).code == 0);
  const auto segs = svg_lines(slurp(tmp / "d/field.svg"));
  REQUIRE(segs.size() > 100);
  const Vec2 c = synthetic::disk_center(64);
  for (const auto& s : segs) {
    const Vec2 mid{(s[0] + s[2]) / 2, (s[1] + s[3]) / 2};
    const Vec2 dir{s[2] - s[0], s[3] - s[1]};
    const Vec2 r = mid - c;
    CHECK(std::fabs(dot(dir, r)) / (norm(dir) * norm(r)) >= 0.9);
  }
}

TEST_CASE("noise subcommand") {
  TempDir tmp("noise");
  save_pgm_file(Image(256, 256, 0.5), tmp / "gray.pgm", true);
  REQUIRE(run_cli({"noise", "--input", tmp / "gray.pgm", "--outdir", tmp / "g0", "--kind", "gaussian", "--stddev",
                   "0"})
              .code == 0);
  CHECK(load_pgm_file(tmp / "g0/noisy.pgm") == load_pgm_file(tmp / "gray.pgm"));

  for (const char* o : {"s1", "s2"})
    REQUIRE(run_cli({"noise", "--input", tmp / "gray.pgm", "--outdir", tmp / o, "--kind", "saltpepper",
                     "--density", "0.05", "--seed", "17"})
                .code == 0);
  CHECK(slurp(tmp / "s1/noisy.pgm") == slurp(tmp / "s2/noisy.pgm"));
  const Image sp = load_pgm_file(tmp / "s1/noisy.pgm");
  int changed = 0;
  for (double v : sp.pixels()) changed += std::fabs(v - 128.0 / 255.0) > 1e-12;
  const double fraction = changed / 65536.0;
  CHECK(fraction >= 0.04);
  CHECK(fraction <= 0.06);

  CHECK(run_cli({"noise", "--input", tmp / "gray.pgm", "--outdir", tmp / "x", "--kind", "speckle"}).code == 1);
  CHECK(run_cli({"noise", "--input", tmp / "gray.pgm", "--outdir", tmp / "x", "--kind", "gaussian", "--stddev",
                 "-1"})
            .code == 1);
}

TEST_CASE("flowgrid subcommand") {
  TempDir tmp("flow");
  save_pgm_file(Image(40, 30, 0.0), tmp / "frame.pgm", true);

  SUBCASE("zero momenta give identical lattices") {
    std::ofstream(tmp / "m.csv") << "qx,qy,px,py\n10,10,0,0\n20,15,0,0\n";
    REQUIRE(run_cli({"flowgrid", "--momenta", tmp / "m.csv", "--input", tmp / "frame.pgm", "--outdir", tmp / "z",
                     "--spacing", "5"})
                .code == 0);
    const auto g0 = grid_polylines(slurp(tmp / "z/grid_t0.svg"));
    CHECK(g0.size() == 9u + 7u);
    CHECK(grid_polylines(slurp(tmp / "z/grid_t05.svg")) == g0);
    CHECK(grid_polylines(slurp(tmp / "z/grid_t1.svg")) == g0);
  }
  SUBCASE("a single particle drags its grid node by p") {
    std::ofstream(tmp / "one.csv") << "qx,qy,px,py\n10,10,3,-2\n";
    REQUIRE(run_cli({"flowgrid", "--momenta", tmp / "one.csv", "--input", tmp / "frame.pgm", "--outdir", tmp / "o",
                     "--spacing", "5", "--sigma-v", "4"})
                .code == 0);
    const auto rows = lines(slurp(tmp / "o/grid.csv"));
    REQUIRE(rows.size() == 1 + 9 * 7);
    bool found = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      double v[7];
      REQUIRE(std::sscanf(rows[i].c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &v[0], &v[1], &v[2], &v[3], &v[4], &v[5],
                          &v[6]) == 7);
      if (v[1] == 10 && v[2] == 10) {
        found = true;
        CHECK(std::fabs(v[5] - 13.0) < 1e-6);
        CHECK(std::fabs(v[6] - 8.0) < 1e-6);
        CHECK(std::fabs(v[3] - 11.5) < 1e-6);
      }
    }
    CHECK(found);
    CHECK(lines(slurp(tmp / "o/trajectory.csv")).size() == 1 + 11);
  }
  SUBCASE("spacing beyond the image leaves the four corners") {
    std::ofstream(tmp / "m.csv") << "10,10,1,1\n";
    REQUIRE(run_cli({"flowgrid", "--momenta", tmp / "m.csv", "--input", tmp / "frame.pgm", "--outdir", tmp / "c",
                     "--spacing", "100"})
                .code == 0);
    const std::string svg = slurp(tmp / "c/grid_t1.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(grid_polylines(svg).size() == 4);
    CHECK(lines(slurp(tmp / "c/grid.csv")).size() == 5);
  }
  SUBCASE("reads a run directory") {
    save_pgm_file(synthetic::disk(32, 9.0), tmp / "disk.pgm", true);
    REQUIRE(run_cli({"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "run", "--iterations", "10"}).code == 0);
    REQUIRE(run_cli({"flowgrid", "--input", tmp / "run", "--outdir", tmp / "fg"}).code == 0);
    CHECK(std::filesystem::exists(tmp / "fg/grid_t05.svg"));
  }
  CHECK(run_cli({"flowgrid", "--outdir", tmp / "none"}).code == 1);
  std::ofstream(tmp / "junk.csv") << "1,2,3\n";
  CHECK(run_cli({"flowgrid", "--momenta", tmp / "junk.csv", "--outdir", tmp / "j"}).code == 2);
}

TEST_CASE("output CSV helpers") {
  const PolyCurve c = PolyCurve::closed({{1, 2}, {3.5, 4}, {0.1, 0.2}});
  CHECK(out::contour_csv(c) == "1,2\n3.5,4\n0.1,0.2\n");
  const ShootingState s{{{1, 2}}, {{-0.5, 1e-12}}};
  const ShootingState back = out::parse_momenta_csv(out::momenta_csv(s));
  CHECK(back.q == s.q);
  CHECK(back.p == s.p);
  CHECK(out::energy_csv(std::vector<EnergyRecord>{{3, 1.0 / 3.0, 0.25, 1, 2}}) ==
        "iter,total,reg,loss,alpha\n3,0.333333333,0.25,1,2\n");
}
