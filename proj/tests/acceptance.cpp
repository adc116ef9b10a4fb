// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "cli_harness.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "vseg/imageio.hpp"
#include "vseg/lddmm.hpp"
#include "vseg/segmenter.hpp"
#include "vseg/varifold.hpp"

using namespace vseg;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

GradientField as_field(const VarifoldAtoms& a) { return {a.centers, a.dirs, a.masses}; }

// 1. Discrete adjoint against central differences.
Outcome adjoint_correctness() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> nv(4, 12), na(10, 40);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = nv(rng);
    const int p = na(rng);
    SegmentationConfig cfg;
    cfg.sigma_var = scale(rng);
    cfg.sigma_v = scale(rng);
    cfg.loss = inst % 2 == 0 ? LossKind::L1 : LossKind::L0;
    const PolyCurve tmpl = oracle::random_polygon(rng, n, {2, 2}, 1.5);
    const GradientField field = as_field(oracle::random_atoms(rng, p, 4.0));
    const Points p0 = oracle::random_points(rng, n, -0.3, 0.3);
    const Points g = grad_total_energy(p0, tmpl, field, cfg);
    const Points fd = oracle::central_diff(
        [&](const Points& x) { return total_energy(x, tmpl, field, cfg).total; }, p0, 1e-5);
    worst = std::max(worst, oracle::max_rel_error(g, fd));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 10.0, fmt("max rel err %.3g (< 1e-5), %.2f s (< 10 s)", worst, secs)};
}

// 2. Energy conservation and fourth-order convergence of RK4.
Outcome hamiltonian_conservation() {
  std::mt19937_64 rng(2002);
  const auto t0 = Clock::now();
  // Particles in a box of side 4 sigma_V; momenta move them less than a kernel width.
  const ShootingState s{oracle::random_points(rng, 10, 0.0, 2.0), oracle::random_points(rng, 10, -0.25, 0.25)};
  auto drift = [&](int nsteps) {
    const DeformationParams d{0.5, nsteps};
    const Trajectory t = shoot(s, d);
    const double h0 = hamiltonian(t.front(), d);
    double worst = 0.0;
    for (const auto& st : t) worst = std::max(worst, std::fabs(hamiltonian(st, d) - h0) / std::fabs(h0));
    return worst;
  };
  const double d10 = drift(10), d20 = drift(20);
  const double ratio = d10 / d20;
  const double secs = seconds_since(t0);
  return {d10 < 1e-6 && ratio >= 12.0 && secs < 1.0,
          fmt("drift %.3g (< 1e-6), ratio %.2f (>= 12), %.3f s", d10, ratio, secs)};
}

// 3. Flows with known closed forms.
Outcome closed_form_flows() {
  const DeformationParams d{1.0, 10};
  const Vec2 q0{1.5, -2.0}, p0{0.7, 0.3};
  const Vec2 q1 = shoot({{q0}, {p0}}, d).back().q[0];
  const double translation = norm(q1 - (q0 + p0));

  std::mt19937_64 rng(3003);
  const Points qs = oracle::random_points(rng, 7, 0.0, 3.0);
  const Trajectory still = shoot({qs, Points(qs.size())}, d);
  bool identity = still.back().q == qs;
  const Points probes = oracle::random_points(rng, 5, -1.0, 4.0);
  identity = identity && flow_points(still, d, probes) == probes;

  const ShootingState s{oracle::random_points(rng, 8, 0.0, 2.0), oracle::random_points(rng, 8, -0.25, 0.25)};
  const DeformationParams dr{0.5, 10};
  const ShootingState end = shoot(s, dr).back();
  ShootingState back{end.q, end.p};
  for (auto& v : back.p) v = v * -1.0;
  const Points q_back = shoot(back, dr).back().q;
  double diameter = 0.0, err = 0.0;
  for (std::size_t i = 0; i < s.q.size(); ++i) {
    err = std::max(err, norm(q_back[i] - s.q[i]));
    for (std::size_t j = 0; j < s.q.size(); ++j) diameter = std::max(diameter, norm(s.q[i] - s.q[j]));
  }
  const double rel = err / diameter;
  return {translation <= 1e-12 && identity && rel <= 1e-6,
          fmt("translation err %.3g (<= 1e-12), reversal %.3g x diameter (<= 1e-6)", translation, rel) +
              (identity ? ", identity exact" : ", identity NOT exact")};
}

// 4. Algebraic properties of the varifold inner product and losses.
Outcome varifold_properties() {
  std::mt19937_64 rng(4004);
  std::uniform_int_distribution<int> count(1, 40);
  std::uniform_real_distribution<double> sig(0.3, 3.0), angle(0.0, 2.0 * std::numbers::pi), mass(0.1, 10.0);
  const auto t0 = Clock::now();
  double sym = 0, scale_inv = 0, rot = 0, blocked = 0;
  bool nonneg = true, ordered = true, sign_exact = true;
  for (int inst = 0; inst < 100; ++inst) {
    const KernelParams k{sig(rng)};
    const VarifoldAtoms a = oracle::random_atoms(rng, count(rng), 5.0);
    const VarifoldAtoms b = oracle::random_atoms(rng, count(rng), 5.0);
    const double ab = inner_product(a, b, k);
    sym = std::max(sym, oracle::relative_diff(ab, inner_product(b, a, k)));
    blocked = std::max(blocked, oracle::relative_diff(ab, oracle::naive_inner_product(a, b, k.sigma)));

    const double l0 = loss_L0(a, b, k);
    const ReweightedLoss l1 = loss_L1(a, b, k);
    nonneg = nonneg && inner_product(a, a, k) >= 0.0 && l1.loss >= -1e-12 * inner_product(b, b, k);
    ordered = ordered && l1.loss <= l0 + 1e-12 * std::max(1.0, l0);

    VarifoldAtoms scaled = a;
    const double s = mass(rng);
    for (double& m : scaled.masses) m *= s;
    scale_inv = std::max(scale_inv, oracle::relative_diff(loss_L1(scaled, b, k).loss, l1.loss));

    const double t = angle(rng);
    const double c = std::cos(t), sn = std::sin(t);
    auto rotate = [&](VarifoldAtoms v) {
      for (auto& x : v.centers) x = {c * x.x - sn * x.y, sn * x.x + c * x.y};
      for (auto& x : v.dirs) x = {c * x.x - sn * x.y, sn * x.x + c * x.y};
      return v;
    };
    rot = std::max(rot, oracle::relative_diff(inner_product(rotate(a), rotate(b), k), ab));

    VarifoldAtoms flipped = a;
    for (std::size_t i = 0; i < flipped.size(); i += 2) flipped.dirs[i] = flipped.dirs[i] * -1.0;
    sign_exact = sign_exact && inner_product(flipped, b, k) == ab;
  }
  const double secs = seconds_since(t0);
  const bool pass = sym <= 1e-12 && nonneg && ordered && scale_inv <= 1e-12 && rot <= 1e-12 && sign_exact &&
                    blocked <= 1e-12 && secs < 5.0;
  std::string d = fmt("symmetry %.2g, mass-scale %.2g, rotation %.2g, blocked-vs-naive %.2g (all <= 1e-12)", sym,
                      scale_inv, rot, blocked);
  d += std::string(", nonneg ") + (nonneg ? "ok" : "NO") + ", L1<=L0 " + (ordered ? "ok" : "NO") +
       ", sign " + (sign_exact ? "exact" : "NOT exact") + fmt(", %.2f s (< 5 s)", secs);
  return {pass, d};
}

// 5. Values computable by hand.
Outcome spot_values() {
  const KernelParams k{1.0};
  auto atom = [](Vec2 x, Vec2 u, double m) { return VarifoldAtoms{{x}, {u}, {m}}; };
  const double same = inner_product(atom({0, 0}, {1, 0}, 1), atom({0, 0}, {1, 0}, 1), k);
  const double ortho = inner_product(atom({0, 0}, {1, 0}, 1), atom({0, 0}, {0, 1}, 1), k);
  const double apart = inner_product(atom({0, 0}, {1, 0}, 1), atom({1, 0}, {1, 0}, 1), k);
  const ReweightedLoss l1 = loss_L1(atom({0, 0}, {1, 0}, 1), atom({1, 0}, {1, 0}, 1), k);
  const double h = hamiltonian({{{0, 0}, {0.5, 0}}, {{1, 0}, {1, 0}}}, {0.5, 10});
  const double e1 = std::exp(-1.0);
  const double worst = std::max({std::fabs(same - 1.0), std::fabs(ortho), std::fabs(apart - e1),
                                 std::fabs(l1.loss - (1.0 - std::exp(-2.0))), std::fabs(l1.alpha - e1),
                                 std::fabs(h - (1.0 + e1))});
  return {worst <= 1e-12, fmt("L1 %.8f, alpha %.8f, H %.8f, max abs err %.2g (<= 1e-12)", l1.loss, l1.alpha, h,
                              worst)};
}

struct DiskRun {
  synthetic::CircleError err;
  bool simple = false;
  double seconds = 0.0;
};

DiskRun run_disk(const Image& img, const SegmentationConfig& cfg) {
  const auto t0 = Clock::now();
  const SegmentationResult r = segment(img, cfg);
  DiskRun out;
  out.seconds = seconds_since(t0);
  out.err = synthetic::circle_error(r.final_curve.vertices, synthetic::disk_center(64), 20.0);
  out.simple = is_simple_polygon(r.final_curve.vertices);
  return out;
}

// 6. Binary disk with default settings.
Outcome disk_segmentation() {
  SegmentationConfig cfg;
  const DiskRun r = run_disk(synthetic::disk(64, 20.0), cfg);
  return {cfg.iterations <= 300 && r.err.mean < 1.5 && r.err.max < 3.0 && r.simple && r.seconds < 60.0,
          fmt("mean %.3f px (< 1.5), max %.3f px (< 3), %.1f s (< 60 s)", r.err.mean, r.err.max, r.seconds) +
              (r.simple ? ", simple" : ", NOT simple")};
}

// 7. The same disk under two noise models.
Outcome noise_robustness() {
  const Image disk = synthetic::disk(64, 20.0);
  SegmentationConfig sp_cfg;
  sp_cfg.threshold_rel = 0.5;
  const DiskRun sp = run_disk(add_salt_pepper(disk, 0.05, 7), sp_cfg);
  SegmentationConfig g_cfg;
  g_cfg.smooth_sigma = 2.0;
  const DiskRun g = run_disk(add_gaussian_noise(disk, 0.1, 7), g_cfg);
  return {sp.err.mean < 2.5 && g.err.mean < 2.5,
          fmt("salt-and-pepper mean %.3f px, gaussian mean %.3f px (both < 2.5)", sp.err.mean, g.err.mean)};
}

Points circle(Vec2 c, double r, int n) {
  Points v;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    v.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
  }
  return v;
}

// 8. Field mass three times the template length: L1 absorbs it, L0 cannot.
Outcome reweighting_effect() {
  const Vec2 center{32, 32};
  const double radius = 20.0;
  const PolyCurve tmpl = PolyCurve::closed(circle({37, 35}, radius, 48));
  double length = 0.0;
  for (double m : curve_to_atoms(tmpl).masses) length += m;

  const int n_atoms = 160;
  GradientField field;
  for (const Vec2& x : circle(center, radius, n_atoms)) {
    field.points.push_back(x);
    field.dirs.push_back((x - center) * (1.0 / radius));
    field.masses.push_back(3.0 * length / n_atoms);
  }

  SegmentationConfig cfg;
  cfg = cfg.resolved(64, 64);
  auto run = [&](LossKind kind) {
    SegmentationConfig c = cfg;
    c.loss = kind;
    return optimize(tmpl, field, c);
  };
  const SegmentationResult r1 = run(LossKind::L1);
  const SegmentationResult r0 = run(LossKind::L0);
  const double e1 = synthetic::circle_error(r1.final_curve.vertices, center, radius).mean;
  const double e0 = synthetic::circle_error(r0.final_curve.vertices, center, radius).mean;
  const double alpha = r1.energy_history.back().alpha;
  return {e1 < e0 && alpha >= 2.5 && alpha <= 3.5,
          fmt("L1 mean %.3f px < L0 mean %.3f px, alpha %.4f in [2.5, 3.5]", e1, e0, alpha)};
}

// 9. Identical CLI invocations give identical artefacts.
Outcome reproducibility() {
  testing::TempDir tmp("accept_repro");
  save_pgm_file(synthetic::disk(64, 20.0), tmp / "disk.pgm", true);
  const std::vector<std::string> args{"segment", "--input", tmp / "disk.pgm", "--outdir", tmp / "run"};
  struct Files {
    std::string contour, energy;
    nlohmann::json manifest;
  };
  auto once = [&](Files& f) {
    if (testing::run_cli(args).code != 0) return false;
    f.contour = testing::slurp(tmp / "run/contour.csv");
    f.energy = testing::slurp(tmp / "run/energy.csv");
    f.manifest = nlohmann::json::parse(testing::slurp(tmp / "run/manifest.json"));
    f.manifest.erase("duration_s");
    return true;
  };
  Files a, b;
  if (!once(a) || !once(b)) return {false, "segment run failed"};
  const bool c = a.contour == b.contour, e = a.energy == b.energy, m = a.manifest.dump() == b.manifest.dump();
  return {c && e && m, std::string("contour ") + (c ? "same" : "DIFFERS") + ", energy " + (e ? "same" : "DIFFERS") +
                           ", manifest " + (m ? "same" : "DIFFERS")};
}

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

// 10. save(load(x)) is a fixed point of load/save.
Outcome format_fidelity() {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> corpus;
  corpus.emplace_back("ascii", bytes("P2\n3 2\n255\n0 128 255\n7 8 9\n"));
  corpus.emplace_back("ascii-comments", bytes("P2 # magic\n# full-line comment\n4 # width\n1\n255\n1 2\n3 4\n"));
  corpus.emplace_back("ascii-wide", bytes("P2\n2 2\n255\n\n\n  10\t20\r\n30    40\n"));
  std::string bin = "P5\n# binary with comment\n16 4\n255\n";
  for (int i = 0; i < 64; ++i) bin.push_back(static_cast<char>((i * 37) % 256));
  corpus.emplace_back("binary-comments", bytes(bin));
  std::string bin2 = "P5 5 1 255 ";
  for (int i = 0; i < 5; ++i) bin2.push_back(static_cast<char>(250 + i));
  corpus.emplace_back("binary-oneline", bytes(bin2));
  Image grad(32, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) grad(x, y) = ((x * 7 + y * 13) % 256) / 255.0;
  corpus.emplace_back("generated-p5", save_pgm(grad, true));
  corpus.emplace_back("generated-p2", save_pgm(grad, false));

  std::string failed;
  for (const auto& [name, raw] : corpus) {
    const bool binary = raw[1] == '5';
    const auto once = save_pgm(load_pgm(raw), binary);
    const auto twice = save_pgm(load_pgm(once), binary);
    const bool converts = save_pgm(load_pgm(save_pgm(load_pgm(once), !binary)), binary) == once;
    if (once != twice || !converts) failed += " " + name;
  }
  return {failed.empty(), std::to_string(corpus.size()) + " files" + (failed.empty() ? ", all idempotent"
                                                                                       : ", failing:" + failed)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"adjoint correctness", adjoint_correctness},
      {"hamiltonian conservation", hamiltonian_conservation},
      {"closed-form flows", closed_form_flows},
      {"varifold properties", varifold_properties},
      {"analytic spot values", spot_values},
      {"synthetic disk segmentation", disk_segmentation},
      {"noise robustness", noise_robustness},
      {"reweighting effect", reweighting_effect},
      {"reproducibility", reproducibility},
      {"format fidelity", format_fidelity},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
