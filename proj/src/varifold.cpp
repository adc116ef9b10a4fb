#include "vseg/varifold.hpp"

#include <cmath>
#include <cstdio>

#include "vseg/errors.hpp"

namespace vseg {

PolyCurve PolyCurve::closed(Points vertices) {
  PolyCurve c;
  const int n = static_cast<int>(vertices.size());
  c.vertices = std::move(vertices);
  c.edges.reserve(n);
  for (int i = 0; i < n; ++i) c.edges.push_back({i, (i + 1) % n});
  return c;
}

void validate(const PolyCurve& c) {
  const auto n = static_cast<int>(c.vertices.size());
  for (std::size_t e = 0; e < c.edges.size(); ++e) {
    const auto [a, b] = c.edges[e];
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw Error(ErrorKind::Argument, "edge " + std::to_string(e) + " references a missing vertex");
    if (!(norm2(c.vertices[b] - c.vertices[a]) > 0.0))
      throw Error(ErrorKind::Degeneracy, "edge " + std::to_string(e) + " has zero length");
  }
}

GaussCauchyBinet::GaussCauchyBinet(const KernelParams& k) : inv_sigma2(1.0 / (k.sigma * k.sigma)) {
  if (!(k.sigma > 0.0) || !std::isfinite(k.sigma)) throw Error(ErrorKind::Argument, "kernel sigma must be > 0");
}

double GaussCauchyBinet::position(double d2) const { return std::exp(-d2 * inv_sigma2); }

VarifoldAtoms curve_to_atoms(const PolyCurve& c) {
  validate(c);
  VarifoldAtoms atoms;
  atoms.centers.reserve(c.edges.size());
  atoms.dirs.reserve(c.edges.size());
  atoms.masses.reserve(c.edges.size());
  for (const auto& [a, b] : c.edges) {
    const Vec2 t = c.vertices[b] - c.vertices[a];
    const double len = norm(t);
    atoms.centers.push_back((c.vertices[a] + c.vertices[b]) * 0.5);
    atoms.dirs.push_back(rotate_left(t) * (1.0 / len));
    atoms.masses.push_back(len);
  }
  return atoms;
}

VarifoldAtoms field_to_atoms(const GradientField& f) { return {f.points, f.dirs, f.masses}; }

double inner_product(const VarifoldAtoms& a, const VarifoldAtoms& b, const KernelParams& k) {
  const GaussCauchyBinet kern(k);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d2 = norm2(a.centers[i] - b.centers[j]);
      row += b.masses[j] * kern.position(d2) * GaussCauchyBinet::direction(dot(a.dirs[i], b.dirs[j]));
    }
    total += a.masses[i] * row;
  }
  return total;
}

double loss_L0(const VarifoldAtoms& c, const VarifoldAtoms& img, const KernelParams& k) {
  return inner_product(c, c, k) + inner_product(img, img, k) - 2.0 * inner_product(img, c, k);
}

ReweightedLoss loss_L1(const VarifoldAtoms& c, const VarifoldAtoms& img, const KernelParams& k) {
  return loss_L1(c, img, inner_product(img, img, k), k);
}

ReweightedLoss loss_L1(const VarifoldAtoms& c, const VarifoldAtoms& img, double img_norm2, const KernelParams& k) {
  const double cc = inner_product(c, c, k);
  if (!(cc > 0.0)) throw Error(ErrorKind::Degeneracy, "curve varifold has zero norm");
  const double ic = inner_product(img, c, k);
  return {img_norm2 - ic * ic / cc, ic / cc};
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "L1" || s == "l1") return LossKind::L1;
  if (s == "L0" || s == "l0") return LossKind::L0;
  throw Error(ErrorKind::Argument, "loss must be 'L0' or 'L1', got '" + s + "'");
}

const char* to_string(LossKind k) { return k == LossKind::L1 ? "L1" : "L0"; }

namespace {

// Curve edges in the form the derivatives need: centre and the unnormalized
// normal w = rotate_left(tangent), so |w| is the edge length.
struct EdgeAtoms {
  Points centers;
  Points normals;
};

EdgeAtoms edge_atoms(const PolyCurve& c) {
  validate(c);
  EdgeAtoms e;
  e.centers.reserve(c.edges.size());
  e.normals.reserve(c.edges.size());
  for (const auto& [a, b] : c.edges) {
    e.centers.push_back((c.vertices[a] + c.vertices[b]) * 0.5);
    e.normals.push_back(rotate_left(c.vertices[b] - c.vertices[a]));
  }
  return e;
}

// Value of sum_e sum_j n_j rho(|c_e - y_j|) |w_e| gamma(u_e . v_j) and its
// partials with respect to each c_e and w_e, accumulated into gc and gw.
double cross_term(const EdgeAtoms& x, const VarifoldAtoms& y, const GaussCauchyBinet& kern, Points& gc,
                  Points& gw) {
  double total = 0.0;
  for (std::size_t e = 0; e < x.centers.size(); ++e) {
    const double len = norm(x.normals[e]);
    const Vec2 u = x.normals[e] * (1.0 / len);
    double row = 0.0;
    Vec2 dc{}, dw{};
    for (std::size_t j = 0; j < y.size(); ++j) {
      const Vec2 diff = x.centers[e] - y.centers[j];
      const double d2 = norm2(diff);
      const double rho = kern.position(d2);
      const double cosine = dot(u, y.dirs[j]);
      const double gamma = GaussCauchyBinet::direction(cosine);
      const double m = y.masses[j];
      row += m * rho * gamma;
      dc += diff * (2.0 * m * len * gamma * kern.position_slope(d2));
      // d/dw [ |w| gamma(w.v / |w|) ] = gamma u + gamma' (v - (u.v) u)
      dw += (u * gamma + (y.dirs[j] - u * cosine) * GaussCauchyBinet::direction_slope(cosine)) * (m * rho);
    }
    total += len * row;
    gc[e] += dc;
    gw[e] += dw;
  }
  return total;
}

// Pulls edge-centre and edge-normal partials back onto the vertices.
Points to_vertices(const PolyCurve& c, const Points& gc, const Points& gw) {
  Points g(c.vertices.size());
  for (std::size_t e = 0; e < c.edges.size(); ++e) {
    const auto [a, b] = c.edges[e];
    // w = (-t.y, t.x)  =>  dF/dt = (dF/dw.y, -dF/dw.x)
    const Vec2 gt{gw[e].y, -gw[e].x};
    g[a] += gc[e] * 0.5 - gt;
    g[b] += gc[e] * 0.5 + gt;
  }
  return g;
}

}  // namespace

LossGradient loss_and_gradient(LossKind kind, const PolyCurve& c, const VarifoldAtoms& img, double img_norm2,
                               const KernelParams& k) {
  const GaussCauchyBinet kern(k);
  const EdgeAtoms edges = edge_atoms(c);
  const VarifoldAtoms self = curve_to_atoms(c);
  const std::size_t m = c.edges.size();

  Points gc_cross(m), gw_cross(m), gc_self(m), gw_self(m);
  const double ic = cross_term(edges, img, kern, gc_cross, gw_cross);
  // <c,c> is quadratic in the curve: its derivative is twice the one-sided partial.
  const double cc = cross_term(edges, self, kern, gc_self, gw_self);
  if (!(cc > 0.0)) throw Error(ErrorKind::Degeneracy, "curve varifold has zero norm");

  LossGradient out;
  double w_cross = 0.0;
  double w_self = 0.0;
  if (kind == LossKind::L1) {
    out.alpha = ic / cc;
    out.loss = img_norm2 - ic * out.alpha;
    w_cross = -2.0 * out.alpha;
    w_self = 2.0 * out.alpha * out.alpha;
  } else {
    out.alpha = 1.0;
    out.loss = cc + img_norm2 - 2.0 * ic;
    w_cross = -2.0;
    w_self = 2.0;
  }
  Points gc(m), gw(m);
  for (std::size_t e = 0; e < m; ++e) {
    gc[e] = gc_cross[e] * w_cross + gc_self[e] * w_self;
    gw[e] = gw_cross[e] * w_cross + gw_self[e] * w_self;
  }
  out.grad = to_vertices(c, gc, gw);
  return out;
}

Points grad_loss_L1(const PolyCurve& c, const VarifoldAtoms& img, const KernelParams& k) {
  return loss_and_gradient(LossKind::L1, c, img, inner_product(img, img, k), k).grad;
}

Points grad_loss_L0(const PolyCurve& c, const VarifoldAtoms& img, const KernelParams& k) {
  return loss_and_gradient(LossKind::L0, c, img, inner_product(img, img, k), k).grad;
}

std::string atoms_to_csv(const VarifoldAtoms& atoms) {
  std::string out;
  char line[160];
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g\n", atoms.centers[i].x, atoms.centers[i].y,
                  atoms.dirs[i].x, atoms.dirs[i].y, atoms.masses[i]);
    out += line;
  }
  return out;
}

}  // namespace vseg
