#include "vseg/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vseg/errors.hpp"

namespace vseg {

SegmentationConfig SegmentationConfig::resolved(int width, int height) const {
  SegmentationConfig out = *this;
  const double extent = std::max(width, height);
  if (!out.sigma_var) out.sigma_var = 0.1 * extent;
  if (!out.sigma_v) out.sigma_v = 0.2 * extent;
  return out;
}

void validate(const SegmentationConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::Argument, what);
  };
  require(!cfg.sigma_var || (*cfg.sigma_var > 0.0 && std::isfinite(*cfg.sigma_var)), "sigma_var must be > 0");
  require(!cfg.sigma_v || (*cfg.sigma_v > 0.0 && std::isfinite(*cfg.sigma_v)), "sigma_V must be > 0");
  require(cfg.nsteps >= 1, "nsteps must be >= 1");
  require(cfg.lambda_loss >= 0.0 && std::isfinite(cfg.lambda_loss), "lambda must be >= 0");
  require(cfg.threshold_rel >= 0.0 && cfg.threshold_rel <= 1.0, "threshold must lie in [0,1]");
  require(cfg.smooth_sigma >= 0.0 && std::isfinite(cfg.smooth_sigma), "smooth_sigma must be >= 0");
  require(cfg.ellipse_k > 0.0 && std::isfinite(cfg.ellipse_k), "ellipse_k must be > 0");
  require(cfg.n_vertices >= 3, "vertices must be >= 3");
  require(cfg.adam.lr > 0.0 && std::isfinite(cfg.adam.lr), "lr must be > 0");
  require(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0, "beta1 must lie in [0,1)");
  require(cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0, "beta2 must lie in [0,1)");
  require(cfg.adam.eps > 0.0, "eps must be > 0");
  require(cfg.iterations >= 1, "iterations must be >= 1");
  require(cfg.snapshot_every >= 0, "snapshot_every must be >= 0");
}

PolyCurve init_ellipse(const GradientField& field, double k, int n_vertices) {
  if (field.empty()) throw Error(ErrorKind::EmptyField, "empty gradient field: cannot place a template");
  if (!(k > 0.0)) throw Error(ErrorKind::Argument, "ellipse_k must be > 0");
  if (n_vertices < 3) throw Error(ErrorKind::Argument, "an ellipse needs at least 3 vertices");

  const double count = static_cast<double>(field.size());
  Vec2 mean{};
  for (const auto& p : field.points) mean += p;
  mean *= 1.0 / count;
  double var_x = 0.0, var_y = 0.0;
  for (const auto& p : field.points) {
    var_x += (p.x - mean.x) * (p.x - mean.x);
    var_y += (p.y - mean.y) * (p.y - mean.y);
  }
  constexpr double min_axis = 5.0;
  const double a = std::max(k * std::sqrt(var_x / count), min_axis);
  const double b = std::max(k * std::sqrt(var_y / count), min_axis);

  Points v(n_vertices);
  for (int i = 0; i < n_vertices; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / n_vertices;
    v[i] = {mean.x + a * std::cos(theta), mean.y + b * std::sin(theta)};
  }
  return PolyCurve::closed(std::move(v));
}

EnergyModel::EnergyModel(PolyCurve tmpl, const GradientField& field, const SegmentationConfig& cfg)
    : template_(std::move(tmpl)),
      target_(field_to_atoms(field)),
      deformation_{cfg.sigma_v.value_or(0.0), cfg.nsteps},
      kernel_{cfg.sigma_var.value_or(0.0)},
      lambda_(cfg.lambda_loss),
      loss_kind_(cfg.loss) {
  validate(cfg);
  if (!cfg.sigma_var || !cfg.sigma_v) throw Error(ErrorKind::Argument, "kernel scales must be resolved");
  validate(template_);
  if (field.empty()) throw Error(ErrorKind::EmptyField, "empty gradient field");
  target_norm2_ = inner_product(target_, target_, kernel_);
}

namespace {

void require_size(std::span<const Vec2> p0, std::size_t n) {
  if (p0.size() != n) throw Error(ErrorKind::Argument, "momenta count does not match the template vertices");
}

}  // namespace

EnergyRecord EnergyModel::energy(std::span<const Vec2> p0) const {
  require_size(p0, template_.vertices.size());
  const ShootingState s0{template_.vertices, Points(p0.begin(), p0.end())};
  const Trajectory traj = shoot(s0, deformation_);
  const PolyCurve c1{traj.back().q, template_.edges};
  const VarifoldAtoms atoms = curve_to_atoms(c1);

  EnergyRecord r;
  r.reg = reg_energy(s0, deformation_);
  if (loss_kind_ == LossKind::L1) {
    const auto l = loss_L1(atoms, target_, target_norm2_, kernel_);
    r.loss = l.loss;
    r.alpha = l.alpha;
  } else {
    r.loss = inner_product(atoms, atoms, kernel_) + target_norm2_ - 2.0 * inner_product(target_, atoms, kernel_);
    r.alpha = 1.0;
  }
  r.total = r.reg + lambda_ * r.loss;
  return r;
}

EnergyRecord EnergyModel::energy_and_gradient(std::span<const Vec2> p0, Points& grad) const {
  require_size(p0, template_.vertices.size());
  const ShootingState s0{template_.vertices, Points(p0.begin(), p0.end())};
  const Trajectory traj = shoot(s0, deformation_);
  const PolyCurve c1{traj.back().q, template_.edges};
  LossGradient lg = loss_and_gradient(loss_kind_, c1, target_, target_norm2_, kernel_);

  for (auto& g : lg.grad) g *= lambda_;
  const ShootingGradient gs = grad_shoot(traj, deformation_, lg.grad);
  const Points greg = grad_reg_energy(s0, deformation_);
  grad.resize(greg.size());
  for (std::size_t i = 0; i < greg.size(); ++i) grad[i] = gs.gp0[i] + greg[i];

  EnergyRecord r;
  r.reg = reg_energy(s0, deformation_);
  r.loss = lg.loss;
  r.alpha = lg.alpha;
  r.total = r.reg + lambda_ * r.loss;
  return r;
}

PolyCurve EnergyModel::deformed_curve(std::span<const Vec2> p0) const {
  require_size(p0, template_.vertices.size());
  const Trajectory traj = shoot({template_.vertices, Points(p0.begin(), p0.end())}, deformation_);
  return {traj.back().q, template_.edges};
}

EnergyRecord total_energy(std::span<const Vec2> p0, const PolyCurve& tmpl, const GradientField& field,
                          const SegmentationConfig& cfg) {
  return EnergyModel(tmpl, field, cfg).energy(p0);
}

Points grad_total_energy(std::span<const Vec2> p0, const PolyCurve& tmpl, const GradientField& field,
                         const SegmentationConfig& cfg) {
  Points g;
  EnergyModel(tmpl, field, cfg).energy_and_gradient(p0, g);
  return g;
}

void AdamState::update(Points& x, std::span<const Vec2> g, const AdamParams& a) {
  if (m.size() != x.size()) {
    m.assign(x.size(), Vec2{});
    v.assign(x.size(), Vec2{});
    step = 0;
  }
  ++step;
  const double c1 = 1.0 - std::pow(a.beta1, step);
  const double c2 = 1.0 - std::pow(a.beta2, step);
  auto one = [&](double& xi, double& mi, double& vi, double gi) {
    mi = a.beta1 * mi + (1.0 - a.beta1) * gi;
    vi = a.beta2 * vi + (1.0 - a.beta2) * gi * gi;
    xi -= a.lr * (mi / c1) / (std::sqrt(vi / c2) + a.eps);
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    one(x[i].x, m[i].x, v[i].x, g[i].x);
    one(x[i].y, m[i].y, v[i].y, g[i].y);
  }
}

namespace {

bool finite(const EnergyRecord& r) {
  return std::isfinite(r.total) && std::isfinite(r.reg) && std::isfinite(r.loss) && std::isfinite(r.alpha);
}

}  // namespace

SegmentationResult optimize(const PolyCurve& tmpl, const GradientField& field, const SegmentationConfig& cfg,
                            std::span<const Vec2> p_init) {
  const EnergyModel model(tmpl, field, cfg);
  const std::size_t n = tmpl.vertices.size();
  Points p = p_init.empty() ? Points(n) : Points(p_init.begin(), p_init.end());
  require_size(p, n);

  SegmentationResult res;
  res.template_curve = tmpl;
  res.energy_history.reserve(cfg.iterations + 1);
  AdamState adam;
  Points grad;

  for (int it = 0; it <= cfg.iterations; ++it) {
    EnergyRecord rec;
    try {
      rec = model.energy_and_gradient(p, grad);
    } catch (const Error& e) {
      throw with_stage(e, "iteration " + std::to_string(it));
    }
    rec.iteration = it;
    if (!finite(rec))
      throw Error(ErrorKind::Divergence, "iteration " + std::to_string(it) + ": non-finite energy");
    res.energy_history.push_back(rec);
    if (cfg.snapshot_every > 0 && it % cfg.snapshot_every == 0) res.snapshots.push_back({it, model.deformed_curve(p)});
    if (it < cfg.iterations) adam.update(p, grad, cfg.adam);
  }

  res.final_curve = model.deformed_curve(p);
  res.p0 = std::move(p);
  if (!is_simple_polygon(res.final_curve.vertices))
    res.warnings.push_back("final curve self-intersects; consider a larger sigma_V or a smaller learning rate");
  return res;
}

SegmentationResult segment(const Image& img, const SegmentationConfig& cfg) {
  validate(cfg);
  const SegmentationConfig rc = cfg.resolved(img.width(), img.height());
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw with_stage(e, name);
    }
  };
  const Image smooth = stage("smoothing", [&] { return gaussian_smooth(img, rc.smooth_sigma); });
  const VectorImage grad = stage("gradient", [&] { return compute_gradient(smooth); });
  const GradientField field = stage("gradfield", [&] { return extract_field(grad, rc.threshold_rel, rc.mass_mode); });
  const PolyCurve tmpl = stage("template", [&] { return init_ellipse(field, rc.ellipse_k, rc.n_vertices); });
  return stage("optimize", [&] { return optimize(tmpl, field, rc); });
}

double signed_area(std::span<const Vec2> v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double o = cross(b - a, c - a);
  return (o > 0.0) - (o < 0.0);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = orientation(a, b, c), o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a), o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(a, b, c)) || (o2 == 0 && on_segment(a, b, d)) ||
         (o3 == 0 && on_segment(c, d, a)) || (o4 == 0 && on_segment(c, d, b));
}

}  // namespace

bool is_simple_polygon(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  return true;
}

}  // namespace vseg
