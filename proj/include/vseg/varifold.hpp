#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vseg/geometry.hpp"
#include "vseg/gradfield.hpp"

namespace vseg {

using Edge = std::array<int, 2>;

/// Polygonal curve: vertex positions plus directed edges between them.
struct PolyCurve {
  Points vertices;
  std::vector<Edge> edges;

  /// Closed polygon 0 -> 1 -> ... -> n-1 -> 0.
  static PolyCurve closed(Points vertices);
};

/// Throws Error(Argument) on out-of-range indices, Error(Degeneracy) on a
/// zero-length edge.
void validate(const PolyCurve& c);

/// Discrete varifold: weighted (position, unit direction) atoms.
struct VarifoldAtoms {
  Points centers;
  Points dirs;
  std::vector<double> masses;

  std::size_t size() const { return centers.size(); }
};

/// Scale of the Gaussian position kernel exp(-|x - y|^2 / sigma^2).
struct KernelParams {
  double sigma = 1.0;
};

/// Gaussian position kernel times Cauchy-Binet direction kernel (u.v)^2.
struct GaussCauchyBinet {
  double inv_sigma2;

  explicit GaussCauchyBinet(const KernelParams& k);

  double position(double d2) const;
  /// d/d(d2) of position().
  double position_slope(double d2) const { return -inv_sigma2 * position(d2); }
  static double direction(double c) { return c * c; }
  static double direction_slope(double c) { return 2.0 * c; }
};

/// Edge midpoints, left unit normals (tangent rotated by +90 degrees) and
/// edge lengths. The normals point into a polygon of positive signed area.
VarifoldAtoms curve_to_atoms(const PolyCurve& c);
VarifoldAtoms field_to_atoms(const GradientField& f);

/// sum_ij m_i n_j exp(-|x_i - y_j|^2 / sigma^2) (u_i . v_j)^2
///
/// Rows (atoms of `a`) are accumulated sequentially and the row totals are
/// combined in index order, so the result does not depend on how rows are
/// scheduled.
double inner_product(const VarifoldAtoms& a, const VarifoldAtoms& b, const KernelParams& k);

/// <c,c> + <I,I> - 2 <I,c>
double loss_L0(const VarifoldAtoms& c, const VarifoldAtoms& img, const KernelParams& k);

struct ReweightedLoss {
  double loss;
  double alpha;
};

/// min over alpha >= 0 of |I - alpha c|^2, attained at alpha = <I,c> / <c,c>.
/// Throws Error(Degeneracy) when <c,c> == 0.
ReweightedLoss loss_L1(const VarifoldAtoms& c, const VarifoldAtoms& img, const KernelParams& k);

/// Same as loss_L1 with a precomputed <I,I>.
ReweightedLoss loss_L1(const VarifoldAtoms& c, const VarifoldAtoms& img, double img_norm2, const KernelParams& k);

enum class LossKind { L0, L1 };

LossKind parse_loss_kind(const std::string& s);
const char* to_string(LossKind k);

/// Loss value with its derivative with respect to every curve vertex.
struct LossGradient {
  double loss = 0.0;
  double alpha = 1.0;
  Points grad;
};

/// Analytic gradient of the loss with respect to the vertices of `c`.
/// `img_norm2` is <I,I>, which does not depend on the curve.
LossGradient loss_and_gradient(LossKind kind, const PolyCurve& c, const VarifoldAtoms& img, double img_norm2,
                               const KernelParams& k);

/// Convenience: d L1 / d vertices.
Points grad_loss_L1(const PolyCurve& c, const VarifoldAtoms& img, const KernelParams& k);
Points grad_loss_L0(const PolyCurve& c, const VarifoldAtoms& img, const KernelParams& k);

/// "x,y,dx,dy,mass" lines, the gradient-field CSV layout.
std::string atoms_to_csv(const VarifoldAtoms& atoms);

}  // namespace vseg
