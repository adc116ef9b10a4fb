#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vseg/gradfield.hpp"
#include "vseg/imageio.hpp"
#include "vseg/lddmm.hpp"
#include "vseg/varifold.hpp"

namespace vseg {

struct AdamParams {
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct SegmentationConfig {
  /// Varifold kernel scale in pixels; unset means 0.1 * max(width, height).
  std::optional<double> sigma_var;
  /// Deformation kernel scale in pixels; unset means 0.2 * max(width, height).
  std::optional<double> sigma_v;
  int nsteps = 10;
  double lambda_loss = 1.0;
  LossKind loss = LossKind::L1;
  double threshold_rel = 0.2;
  double smooth_sigma = 1.0;
  MassMode mass_mode = MassMode::Unit;
  double ellipse_k = 2.0;
  int n_vertices = 48;
  AdamParams adam;
  int iterations = 300;
  int snapshot_every = 0;
  std::uint64_t seed = 0;

  /// Fills unset kernel scales for an image of the given size.
  SegmentationConfig resolved(int width, int height) const;
};

/// Throws Error(Argument) on any out-of-range field. Unset scales are allowed.
void validate(const SegmentationConfig& cfg);

struct EnergyRecord {
  int iteration = 0;
  double total = 0.0;
  double reg = 0.0;
  double loss = 0.0;
  double alpha = 0.0;
};

struct Snapshot {
  int iteration = 0;
  PolyCurve curve;
};

struct SegmentationResult {
  PolyCurve template_curve;
  PolyCurve final_curve;
  Points p0;
  std::vector<EnergyRecord> energy_history;
  std::vector<Snapshot> snapshots;
  std::vector<std::string> warnings;
};

/// Ellipse centred on the field's mean position with semi-axes
/// max(k * std, 5) px, vertices counter-clockwise (positive signed area).
PolyCurve init_ellipse(const GradientField& field, double k, int n_vertices);

/// Everything total_energy needs that is fixed during an optimization run.
class EnergyModel {
 public:
  /// `cfg` must be resolved (both kernel scales set).
  EnergyModel(PolyCurve tmpl, const GradientField& field, const SegmentationConfig& cfg);

  const PolyCurve& template_curve() const { return template_; }
  const VarifoldAtoms& target() const { return target_; }
  double target_norm2() const { return target_norm2_; }
  const DeformationParams& deformation() const { return deformation_; }

  EnergyRecord energy(std::span<const Vec2> p0) const;
  /// Energy and its gradient with respect to p0.
  EnergyRecord energy_and_gradient(std::span<const Vec2> p0, Points& grad) const;
  /// Template connectivity over q(1).
  PolyCurve deformed_curve(std::span<const Vec2> p0) const;

 private:
  PolyCurve template_;
  VarifoldAtoms target_;
  double target_norm2_ = 0.0;
  DeformationParams deformation_;
  KernelParams kernel_;
  double lambda_ = 1.0;
  LossKind loss_kind_ = LossKind::L1;
};

/// reg_energy(q0, p0) + lambda * loss(curve(q(1)), field).
EnergyRecord total_energy(std::span<const Vec2> p0, const PolyCurve& tmpl, const GradientField& field,
                          const SegmentationConfig& cfg);
Points grad_total_energy(std::span<const Vec2> p0, const PolyCurve& tmpl, const GradientField& field,
                         const SegmentationConfig& cfg);

/// One Adam update of `x` in place; `step` counts from 1.
struct AdamState {
  Points m;
  Points v;
  int step = 0;

  void update(Points& x, std::span<const Vec2> g, const AdamParams& a);
};

/// Adam on the initial momenta, starting from `p_init` (zeros when empty).
SegmentationResult optimize(const PolyCurve& tmpl, const GradientField& field, const SegmentationConfig& cfg,
                            std::span<const Vec2> p_init = {});

/// smooth -> gradient -> field -> ellipse -> optimize -> shoot.
/// Errors carry the failing stage as a message prefix.
SegmentationResult segment(const Image& img, const SegmentationConfig& cfg);

/// True when no two non-adjacent edges of the closed polygon intersect.
bool is_simple_polygon(std::span<const Vec2> vertices);

/// Signed area, positive for counter-clockwise order in a y-up frame.
double signed_area(std::span<const Vec2> vertices);

}  // namespace vseg
