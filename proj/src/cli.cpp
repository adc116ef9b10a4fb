#include "vseg/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vseg/gradfield.hpp"
#include "vseg/imageio.hpp"
#include "vseg/lddmm.hpp"
#include "vseg/outputs.hpp"

#ifndef VSEG_VERSION
#define VSEG_VERSION "0.0.0"
#endif

namespace vseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return Usage;
    case ErrorKind::Format:
    case ErrorKind::Truncation:
    case ErrorKind::Header:
    case ErrorKind::Size:
    case ErrorKind::EmptyField: return Input;
    case ErrorKind::Degeneracy:
    case ErrorKind::Divergence: return Numeric;
  }
  return Usage;
}

namespace {

json to_json(const SegmentationConfig& c) {
  json j;
  j["sigma_var"] = c.sigma_var ? json(*c.sigma_var) : json(nullptr);
  j["sigma_v"] = c.sigma_v ? json(*c.sigma_v) : json(nullptr);
  j["nsteps"] = c.nsteps;
  j["lambda_loss"] = c.lambda_loss;
  j["loss"] = to_string(c.loss);
  j["threshold_rel"] = c.threshold_rel;
  j["smooth_sigma"] = c.smooth_sigma;
  j["mass_mode"] = to_string(c.mass_mode);
  j["ellipse_k"] = c.ellipse_k;
  j["n_vertices"] = c.n_vertices;
  j["adam_lr"] = c.adam.lr;
  j["adam_beta1"] = c.adam.beta1;
  j["adam_beta2"] = c.adam.beta2;
  j["adam_eps"] = c.adam.eps;
  j["iterations"] = c.iterations;
  j["snapshot_every"] = c.snapshot_every;
  j["seed"] = c.seed;
  return j;
}

template <typename T>
T get(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Argument, "config key '" + key + "' has the wrong type");
  }
}

std::optional<double> get_scale(const json& v, const std::string& key) {
  if (v.is_null()) return std::nullopt;
  return get<double>(v, key);
}

}  // namespace

void apply_config_json(SegmentationConfig& c, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Argument, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Argument, "config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "sigma_var") c.sigma_var = get_scale(v, key);
    else if (key == "sigma_v") c.sigma_v = get_scale(v, key);
    else if (key == "nsteps") c.nsteps = get<int>(v, key);
    else if (key == "lambda_loss") c.lambda_loss = get<double>(v, key);
    else if (key == "loss") c.loss = parse_loss_kind(get<std::string>(v, key));
    else if (key == "threshold_rel") c.threshold_rel = get<double>(v, key);
    else if (key == "smooth_sigma") c.smooth_sigma = get<double>(v, key);
    else if (key == "mass_mode") c.mass_mode = parse_mass_mode(get<std::string>(v, key));
    else if (key == "ellipse_k") c.ellipse_k = get<double>(v, key);
    else if (key == "n_vertices") c.n_vertices = get<int>(v, key);
    else if (key == "adam_lr") c.adam.lr = get<double>(v, key);
    else if (key == "adam_beta1") c.adam.beta1 = get<double>(v, key);
    else if (key == "adam_beta2") c.adam.beta2 = get<double>(v, key);
    else if (key == "adam_eps") c.adam.eps = get<double>(v, key);
    else if (key == "iterations") c.iterations = get<int>(v, key);
    else if (key == "snapshot_every") c.snapshot_every = get<int>(v, key);
    else if (key == "seed") c.seed = get<std::uint64_t>(v, key);
    else throw Error(ErrorKind::Argument, "unknown config key '" + key + "'");
  }
}

std::string config_json(const SegmentationConfig& cfg) { return to_json(cfg).dump(2); }

namespace {

// Flag values; unset flags leave the configuration untouched.
struct Flags {
  std::string input;
  std::string outdir;
  std::string config;
  std::optional<double> sigma_var, sigma_v, lambda, threshold, smooth_sigma, ellipse_k, lr;
  std::optional<int> nsteps, vertices, iterations, snapshot_every;
  std::optional<std::string> mass_mode;
  std::optional<std::uint64_t> seed;
  std::string kind;
  double stddev = 0.0;
  double density = 0.0;
  double spacing = 4.0;
  std::string momenta;
};

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Format, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Format, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorKind::Format, "cannot write " + path.string());
}

void make_outdir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Format, "cannot create output directory " + dir);
}

SegmentationConfig resolve_config(const Flags& f) {
  SegmentationConfig c;
  if (!f.config.empty()) {
    std::string text;
    try {
      text = read_text(f.config);
    } catch (const Error& e) {
      throw Error(ErrorKind::Argument, e.what());
    }
    apply_config_json(c, text);
  }
  if (f.sigma_var) c.sigma_var = f.sigma_var;
  if (f.sigma_v) c.sigma_v = f.sigma_v;
  if (f.nsteps) c.nsteps = *f.nsteps;
  if (f.lambda) c.lambda_loss = *f.lambda;
  if (f.threshold) c.threshold_rel = *f.threshold;
  if (f.smooth_sigma) c.smooth_sigma = *f.smooth_sigma;
  if (f.mass_mode) c.mass_mode = parse_mass_mode(*f.mass_mode);
  if (f.ellipse_k) c.ellipse_k = *f.ellipse_k;
  if (f.vertices) c.n_vertices = *f.vertices;
  if (f.lr) c.adam.lr = *f.lr;
  if (f.iterations) c.iterations = *f.iterations;
  if (f.snapshot_every) c.snapshot_every = *f.snapshot_every;
  if (f.seed) c.seed = *f.seed;
  validate(c);
  return c;
}

// Errors raised while reading inputs are input errors whatever their kind.
Image read_image(const std::string& path) {
  try {
    return load_pgm_file(path);
  } catch (const Error& e) {
    throw Error(e.kind() == ErrorKind::Argument ? ErrorKind::Format : e.kind(), std::string("input: ") + e.what());
  }
}

int cmd_segment(const Flags& f, std::ostream& out, std::ostream& err) {
  const SegmentationConfig cfg = resolve_config(f);
  const Image img = read_image(f.input);
  make_outdir(f.outdir);
  const auto start = std::chrono::steady_clock::now();
  const SegmentationResult res = segment(img, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& w : res.warnings) err << "vseg segment: warning: " << w << "\n";

  const fs::path dir(f.outdir);
  write_text(dir / "contour.csv", out::contour_csv(res.final_curve));
  write_text(dir / "energy.csv", out::energy_csv(res.energy_history));
  write_text(dir / "overlay.svg", out::overlay_svg(img, res.final_curve, res.snapshots));
  write_text(dir / "momenta.csv", out::momenta_csv({res.template_curve.vertices, res.p0}));

  json manifest = to_json(cfg.resolved(img.width(), img.height()));
  manifest["command"] = "segment";
  manifest["input"] = f.input;
  manifest["outdir"] = f.outdir;
  manifest["version"] = VSEG_VERSION;
  manifest["image_width"] = img.width();
  manifest["image_height"] = img.height();
  manifest["duration_s"] = seconds;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  const auto& last = res.energy_history.back();
  out << "segment: " << res.final_curve.vertices.size() << " vertices, total " << last.total << ", loss "
      << last.loss << ", alpha " << last.alpha << "\n";
  return Ok;
}

int cmd_gradfield(const Flags& f, std::ostream& out, std::ostream&) {
  const SegmentationConfig cfg = resolve_config(f);
  const Image img = read_image(f.input);
  make_outdir(f.outdir);
  GradientField field;
  try {
    field = extract_field(compute_gradient(gaussian_smooth(img, cfg.smooth_sigma)), cfg.threshold_rel, cfg.mass_mode);
  } catch (const Error& e) {
    throw with_stage(e, "gradfield");
  }
  const fs::path dir(f.outdir);
  write_text(dir / "field.csv", field_to_csv(field));
  write_text(dir / "field.svg", out::quiver_svg(img, field));
  out << "gradfield: " << field.size() << " atoms\n";
  return Ok;
}

int cmd_noise(const Flags& f, std::ostream& out, std::ostream&) {
  const Image img = read_image(f.input);
  const std::uint64_t seed = f.seed.value_or(0);
  Image noisy;
  if (f.kind == "gaussian")
    noisy = add_gaussian_noise(img, f.stddev, seed);
  else if (f.kind == "saltpepper")
    noisy = add_salt_pepper(img, f.density, seed);
  else
    throw Error(ErrorKind::Argument, "--kind must be 'gaussian' or 'saltpepper'");
  make_outdir(f.outdir);
  const fs::path path = fs::path(f.outdir) / "noisy.pgm";
  save_pgm_file(noisy, path.string(), true);
  out << "noise: wrote " << path.string() << "\n";
  return Ok;
}

int cmd_flowgrid(const Flags& f, std::ostream& out, std::ostream& err) {
  SegmentationConfig cfg = resolve_config(f);
  ShootingState s0;
  double width = 0.0, height = 0.0;

  if (!f.input.empty() && fs::is_directory(f.input)) {
    const fs::path run(f.input);
    s0 = out::parse_momenta_csv(read_text((run / "momenta.csv").string()));
    json m;
    try {
      m = json::parse(read_text((run / "manifest.json").string()));
      width = m.at("image_width").get<double>();
      height = m.at("image_height").get<double>();
      SegmentationConfig from_run;
      from_run.sigma_v = m.at("sigma_v").get<double>();
      from_run.nsteps = m.at("nsteps").get<int>();
      if (!f.sigma_v && !cfg.sigma_v) cfg.sigma_v = from_run.sigma_v;
      if (!f.nsteps) cfg.nsteps = from_run.nsteps;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, std::string("run manifest: ") + e.what());
    }
  } else {
    if (f.momenta.empty()) throw Error(ErrorKind::Argument, "flowgrid needs --momenta or a run directory as --input");
    s0 = out::parse_momenta_csv(read_text(f.momenta));
    if (!f.input.empty()) {
      const Image img = read_image(f.input);
      width = img.width();
      height = img.height();
    } else {
      for (const auto& q : s0.q) {
        width = std::max(width, std::ceil(q.x) + 1.0);
        height = std::max(height, std::ceil(q.y) + 1.0);
      }
      width = std::max(width, 1.0);
      height = std::max(height, 1.0);
    }
  }
  const SegmentationConfig rc = cfg.resolved(static_cast<int>(width), static_cast<int>(height));
  DeformationParams d{*rc.sigma_v, rc.nsteps};
  if (d.nsteps % 2 != 0) {
    ++d.nsteps;
    err << "vseg flowgrid: note: nsteps raised to " << d.nsteps << " so that t = 1/2 is a step boundary\n";
  }

  const Lattice lattice = make_lattice(width, height, f.spacing);
  const Trajectory traj = shoot(s0, d);
  const auto path = flow_points_path(traj, d, lattice.nodes);
  make_outdir(f.outdir);
  const fs::path dir(f.outdir);
  const int half = d.nsteps / 2;
  write_text(dir / "grid_t0.svg", out::grid_svg(width, height, lattice, path[0], traj, 0));
  write_text(dir / "grid_t05.svg", out::grid_svg(width, height, lattice, path[half], traj, half));
  write_text(dir / "grid_t1.svg", out::grid_svg(width, height, lattice, path[d.nsteps], traj, d.nsteps));
  write_text(dir / "trajectory.csv", trajectory_to_csv(traj));

  std::string nodes = "node,x0,y0,xh,yh,x1,y1\n";
  char line[200];
  for (std::size_t i = 0; i < lattice.nodes.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", i, path[0][i].x, path[0][i].y,
                  path[half][i].x, path[half][i].y, path[d.nsteps][i].x, path[d.nsteps][i].y);
    nodes += line;
  }
  write_text(dir / "grid.csv", nodes);
  out << "flowgrid: " << lattice.cols << "x" << lattice.rows << " lattice, " << s0.q.size() << " control points\n";
  return Ok;
}

void add_config_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON configuration file");
  app->add_option("--sigma-var", f.sigma_var, "varifold kernel scale (px)");
  app->add_option("--sigma-v", f.sigma_v, "deformation kernel scale (px)");
  app->add_option("--nsteps", f.nsteps, "RK4 steps on [0,1]");
  app->add_option("--lambda", f.lambda, "weight of the varifold loss");
  app->add_option("--threshold", f.threshold, "relative gradient threshold in [0,1]");
  app->add_option("--smooth-sigma", f.smooth_sigma, "Gaussian pre-smoothing (px)");
  app->add_option("--mass-mode", f.mass_mode, "unit | magnitude");
  app->add_option("--ellipse-k", f.ellipse_k, "ellipse semi-axis multiplier");
  app->add_option("--vertices", f.vertices, "template vertex count");
  app->add_option("--lr", f.lr, "Adam learning rate");
  app->add_option("--iterations", f.iterations, "Adam iterations");
  app->add_option("--snapshot-every", f.snapshot_every, "snapshot period (0 = none)");
  app->add_option("--seed", f.seed, "random seed");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image segmentation by diffeomorphic deformation of a template curve"};
  app.set_version_flag("--version", VSEG_VERSION);
  app.require_subcommand(1);
  Flags f;

  auto* seg = app.add_subcommand("segment", "segment an image");
  seg->add_option("--input", f.input, "input PGM")->required();
  seg->add_option("--outdir", f.outdir, "output directory")->required();
  add_config_flags(seg, f);

  auto* grad = app.add_subcommand("gradfield", "extract and render the gradient field");
  grad->add_option("--input", f.input, "input PGM")->required();
  grad->add_option("--outdir", f.outdir, "output directory")->required();
  add_config_flags(grad, f);

  auto* noise = app.add_subcommand("noise", "add Gaussian or salt-and-pepper noise");
  noise->add_option("--input", f.input, "input PGM")->required();
  noise->add_option("--outdir", f.outdir, "output directory (writes noisy.pgm)")->required();
  noise->add_option("--kind", f.kind, "gaussian | saltpepper")->required();
  noise->add_option("--stddev", f.stddev, "Gaussian standard deviation");
  noise->add_option("--density", f.density, "salt-and-pepper density in [0,1]");
  noise->add_option("--seed", f.seed, "random seed");

  auto* flow = app.add_subcommand("flowgrid", "render a lattice deformed by a stored geodesic");
  flow->add_option("--input", f.input, "run directory, or PGM giving the lattice extent");
  flow->add_option("--momenta", f.momenta, "CSV qx,qy,px,py");
  flow->add_option("--outdir", f.outdir, "output directory")->required();
  flow->add_option("--spacing", f.spacing, "lattice spacing (px)");
  add_config_flags(flow, f);

  const std::string name = argc > 0 ? fs::path(argv[0]).filename().string() : "vseg";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << name << ": " << e.what() << "\n";
    return Usage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == seg) return cmd_segment(f, out, err);
    if (sub == grad) return cmd_gradfield(f, out, err);
    if (sub == noise) return cmd_noise(f, out, err);
    return cmd_flowgrid(f, out, err);
  } catch (const Error& e) {
    err << name << " " << sub->get_name() << ": " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << name << " " << sub->get_name() << ": " << e.what() << "\n";
    return Input;
  }
}

}  // namespace vseg::cli
