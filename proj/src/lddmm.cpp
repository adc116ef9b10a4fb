#include "vseg/lddmm.hpp"

#include <cmath>
#include <cstdio>

#include "vseg/errors.hpp"

namespace vseg {

namespace {

void check(const ShootingState& s) {
  if (s.q.empty() || s.q.size() != s.p.size())
    throw Error(ErrorKind::Argument, "shooting state needs matching, non-empty q and p");
}

void check(const DeformationParams& d) {
  if (!(d.sigma_v > 0.0) || !std::isfinite(d.sigma_v)) throw Error(ErrorKind::Argument, "sigma_V must be > 0");
  if (d.nsteps < 1) throw Error(ErrorKind::Argument, "nsteps must be >= 1");
}

double kernel(const Vec2& a, const Vec2& b, double inv_s2) { return std::exp(-norm2(a - b) * inv_s2); }

// sum_ij (p_i . p_j) K(q_i, q_j)
double quadratic_form(const ShootingState& s, double inv_s2) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.q.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < s.q.size(); ++j) row += dot(s.p[i], s.p[j]) * kernel(s.q[i], s.q[j], inv_s2);
    total += row;
  }
  return total;
}

// Control points plus passive points advanced by the same RK4 stages.
struct FlowState {
  Points q;
  Points p;
  Points x;
};

FlowState field(const FlowState& s, double inv_s2) {
  const std::size_t n = s.q.size();
  FlowState f{Points(n), Points(n), Points(s.x.size())};
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 qdot{}, pdot{};
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 d = s.q[i] - s.q[j];
      const double k = std::exp(-norm2(d) * inv_s2);
      qdot += s.p[j] * k;
      pdot += d * (dot(s.p[i], s.p[j]) * k);
    }
    f.q[i] = qdot;
    f.p[i] = pdot * (2.0 * inv_s2);
  }
  for (std::size_t m = 0; m < s.x.size(); ++m) {
    Vec2 v{};
    for (std::size_t j = 0; j < n; ++j) v += s.p[j] * kernel(s.x[m], s.q[j], inv_s2);
    f.x[m] = v;
  }
  return f;
}

void axpy(Points& y, double a, const Points& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i] * a;
}

FlowState shifted(const FlowState& s, double a, const FlowState& k) {
  FlowState out = s;
  axpy(out.q, a, k.q);
  axpy(out.p, a, k.p);
  axpy(out.x, a, k.x);
  return out;
}

bool finite(const Points& pts) {
  for (const auto& v : pts)
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) return false;
  return true;
}

void rk4_step(FlowState& s, double h, double inv_s2) {
  const FlowState k1 = field(s, inv_s2);
  const FlowState k2 = field(shifted(s, 0.5 * h, k1), inv_s2);
  const FlowState k3 = field(shifted(s, 0.5 * h, k2), inv_s2);
  const FlowState k4 = field(shifted(s, h, k3), inv_s2);
  auto combine = [h](Points& y, const Points& a, const Points& b, const Points& c, const Points& d) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]) * (h / 6.0);
  };
  combine(s.q, k1.q, k2.q, k3.q, k4.q);
  combine(s.p, k1.p, k2.p, k3.p, k4.p);
  combine(s.x, k1.x, k2.x, k3.x, k4.x);
}

void check_finite(const FlowState& s, int step) {
  if (!finite(s.q) || !finite(s.p) || !finite(s.x))
    throw Error(ErrorKind::Divergence,
                "geodesic shooting diverged at step " + std::to_string(step) + " (momenta too large)");
}

// Transposed Jacobian of the Hamiltonian field at s applied to (a, b), where
// a pairs with dq/dt and b with dp/dt.
ShootingState field_vjp(const ShootingState& s, const Points& a, const Points& b, double inv_s2) {
  const std::size_t n = s.q.size();
  const double c = 2.0 * inv_s2;
  ShootingState g{Points(n), Points(n)};
  for (std::size_t k = 0; k < n; ++k) {
    Vec2 gq{}, gp{};
    for (std::size_t j = 0; j < n; ++j) {
      const Vec2 d = s.q[k] - s.q[j];
      const double K = std::exp(-norm2(d) * inv_s2);
      const Vec2 beta = b[k] - b[j];
      const double bd = dot(beta, d);
      gp += a[j] * K + s.p[j] * (c * K * bd);
      gq += d * (-c * K * (dot(a[k], s.p[j]) + dot(a[j], s.p[k])));
      gq += (beta - d * (c * bd)) * (c * dot(s.p[k], s.p[j]) * K);
    }
    g.q[k] = gq;
    g.p[k] = gp;
  }
  return g;
}

}  // namespace

double hamiltonian(const ShootingState& s, const DeformationParams& d) {
  check(s);
  check(d);
  return 0.5 * quadratic_form(s, 1.0 / (d.sigma_v * d.sigma_v));
}

double reg_energy(const ShootingState& s0, const DeformationParams& d) {
  check(s0);
  check(d);
  return quadratic_form(s0, 1.0 / (d.sigma_v * d.sigma_v));
}

Points grad_reg_energy(const ShootingState& s0, const DeformationParams& d) {
  check(s0);
  check(d);
  const double inv_s2 = 1.0 / (d.sigma_v * d.sigma_v);
  Points g(s0.q.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec2 acc{};
    for (std::size_t j = 0; j < g.size(); ++j) acc += s0.p[j] * kernel(s0.q[i], s0.q[j], inv_s2);
    g[i] = acc * 2.0;
  }
  return g;
}

ShootingState hamiltonian_field(const ShootingState& s, const DeformationParams& d) {
  check(s);
  check(d);
  FlowState f = field({s.q, s.p, {}}, 1.0 / (d.sigma_v * d.sigma_v));
  return {std::move(f.q), std::move(f.p)};
}

Trajectory shoot(const ShootingState& s0, const DeformationParams& d) {
  check(s0);
  check(d);
  const double inv_s2 = 1.0 / (d.sigma_v * d.sigma_v);
  const double h = 1.0 / d.nsteps;
  Trajectory traj;
  traj.reserve(d.nsteps + 1);
  traj.push_back(s0);
  FlowState s{s0.q, s0.p, {}};
  check_finite(s, 0);
  for (int step = 1; step <= d.nsteps; ++step) {
    rk4_step(s, h, inv_s2);
    check_finite(s, step);
    traj.push_back({s.q, s.p});
  }
  return traj;
}

std::vector<Points> flow_points_path(const Trajectory& traj, const DeformationParams& d, std::span<const Vec2> xs) {
  if (traj.empty()) throw Error(ErrorKind::Argument, "empty trajectory");
  check(traj.front());
  check(d);
  const double inv_s2 = 1.0 / (d.sigma_v * d.sigma_v);
  const double h = 1.0 / d.nsteps;
  FlowState s{traj.front().q, traj.front().p, Points(xs.begin(), xs.end())};
  std::vector<Points> path;
  path.reserve(d.nsteps + 1);
  path.push_back(s.x);
  for (int step = 1; step <= d.nsteps; ++step) {
    rk4_step(s, h, inv_s2);
    check_finite(s, step);
    path.push_back(s.x);
  }
  return path;
}

Points flow_points(const Trajectory& traj, const DeformationParams& d, std::span<const Vec2> xs) {
  return flow_points_path(traj, d, xs).back();
}

ShootingGradient grad_shoot(const ShootingState& s0, const DeformationParams& d, std::span<const Vec2> gbar_q1) {
  return grad_shoot(shoot(s0, d), d, gbar_q1);
}

ShootingGradient grad_shoot(const Trajectory& traj, const DeformationParams& d, std::span<const Vec2> gbar_q1) {
  check(d);
  if (traj.size() != static_cast<std::size_t>(d.nsteps) + 1)
    throw Error(ErrorKind::Argument, "trajectory length does not match nsteps");
  const std::size_t n = traj.front().q.size();
  if (gbar_q1.size() != n) throw Error(ErrorKind::Argument, "gradient size does not match the particle count");
  const double inv_s2 = 1.0 / (d.sigma_v * d.sigma_v);
  const double h = 1.0 / d.nsteps;

  Points aq(gbar_q1.begin(), gbar_q1.end());
  Points ap(n);
  for (int step = d.nsteps - 1; step >= 0; --step) {
    // Rebuild the stage inputs of this step.
    const FlowState y1{traj[step].q, traj[step].p, {}};
    const FlowState k1 = field(y1, inv_s2);
    const FlowState y2 = shifted(y1, 0.5 * h, k1);
    const FlowState k2 = field(y2, inv_s2);
    const FlowState y3 = shifted(y1, 0.5 * h, k2);
    const FlowState k3 = field(y3, inv_s2);
    const FlowState y4 = shifted(y1, h, k3);

    // Cotangents of the four slopes from y' = y + h/6 (k1 + 2 k2 + 2 k3 + k4).
    Points k1q = aq, k1p = ap, k2q = aq, k2p = ap, k3q = aq, k3p = ap, k4q = aq, k4p = ap;
    for (std::size_t i = 0; i < n; ++i) {
      k1q[i] *= h / 6.0; k1p[i] *= h / 6.0;
      k2q[i] *= h / 3.0; k2p[i] *= h / 3.0;
      k3q[i] *= h / 3.0; k3p[i] *= h / 3.0;
      k4q[i] *= h / 6.0; k4p[i] *= h / 6.0;
    }

    const ShootingState g4 = field_vjp({y4.q, y4.p}, k4q, k4p, inv_s2);
    axpy(aq, 1.0, g4.q);
    axpy(ap, 1.0, g4.p);
    axpy(k3q, h, g4.q);
    axpy(k3p, h, g4.p);

    const ShootingState g3 = field_vjp({y3.q, y3.p}, k3q, k3p, inv_s2);
    axpy(aq, 1.0, g3.q);
    axpy(ap, 1.0, g3.p);
    axpy(k2q, 0.5 * h, g3.q);
    axpy(k2p, 0.5 * h, g3.p);

    const ShootingState g2 = field_vjp({y2.q, y2.p}, k2q, k2p, inv_s2);
    axpy(aq, 1.0, g2.q);
    axpy(ap, 1.0, g2.p);
    axpy(k1q, 0.5 * h, g2.q);
    axpy(k1p, 0.5 * h, g2.p);

    const ShootingState g1 = field_vjp({y1.q, y1.p}, k1q, k1p, inv_s2);
    axpy(aq, 1.0, g1.q);
    axpy(ap, 1.0, g1.p);
  }
  return {std::move(aq), std::move(ap)};
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "step,particle,qx,qy,px,py\n";
  char line[200];
  for (std::size_t t = 0; t < traj.size(); ++t)
    for (std::size_t i = 0; i < traj[t].q.size(); ++i) {
      std::snprintf(line, sizeof line, "%zu,%zu,%.9g,%.9g,%.9g,%.9g\n", t, i, traj[t].q[i].x, traj[t].q[i].y,
                    traj[t].p[i].x, traj[t].p[i].y);
      out += line;
    }
  return out;
}

Lattice make_lattice(double width, double height, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorKind::Argument, "lattice spacing must be > 0");
  if (!(width >= 1.0 && height >= 1.0)) throw Error(ErrorKind::Argument, "lattice extent must be >= 1 pixel");
  auto axis = [spacing](double extent) {
    const double last = extent - 1.0;
    std::vector<double> v;
    for (int i = 0;; ++i) {
      const double c = i * spacing;
      if (c >= last - 1e-9) break;
      v.push_back(c);
    }
    v.push_back(last);
    return v;
  };
  const auto xs = axis(width);
  const auto ys = axis(height);
  Lattice l{static_cast<int>(xs.size()), static_cast<int>(ys.size()), {}};
  l.nodes.reserve(xs.size() * ys.size());
  for (double y : ys)
    for (double x : xs) l.nodes.push_back({x, y});
  return l;
}

}  // namespace vseg
