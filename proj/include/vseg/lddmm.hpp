#pragma once

#include <span>
#include <string>
#include <vector>

#include "vseg/geometry.hpp"

namespace vseg {

/// Control points and their momenta; the velocity field is
/// v(x) = sum_i exp(-|x - q_i|^2 / sigma_V^2) p_i.
struct ShootingState {
  Points q;
  Points p;
};

struct DeformationParams {
  double sigma_v = 1.0;
  int nsteps = 10;
};

using Trajectory = std::vector<ShootingState>;

/// 1/2 sum_ij (p_i . p_j) K(q_i, q_j)
double hamiltonian(const ShootingState& s, const DeformationParams& d);

/// Integral of |v_t|_V^2 over [0, 1]; equals 2 H(q0, p0) along a geodesic.
double reg_energy(const ShootingState& s0, const DeformationParams& d);

/// d reg_energy / d p0 = 2 K(q0, q0) p0.
Points grad_reg_energy(const ShootingState& s0, const DeformationParams& d);

/// Hamiltonian vector field (dq/dt, dp/dt).
ShootingState hamiltonian_field(const ShootingState& s, const DeformationParams& d);

/// Fixed-step RK4 on [0, 1]. Returns nsteps + 1 states, starting with s0.
/// Throws Error(Divergence) naming the first step that produced a non-finite value.
Trajectory shoot(const ShootingState& s0, const DeformationParams& d);

/// Final positions of passive points carried by the flow, integrated with the
/// control points inside the same RK4 stages.
Points flow_points(const Trajectory& traj, const DeformationParams& d, std::span<const Vec2> xs);

/// Passive point positions after every step (nsteps + 1 entries).
std::vector<Points> flow_points_path(const Trajectory& traj, const DeformationParams& d, std::span<const Vec2> xs);

/// Gradient of a scalar objective with respect to (q0, p0), given its
/// gradient with respect to q(1). Discrete adjoint of the RK4 recursion.
struct ShootingGradient {
  Points gq0;
  Points gp0;
};

ShootingGradient grad_shoot(const ShootingState& s0, const DeformationParams& d, std::span<const Vec2> gbar_q1);

/// Same as above, reusing a trajectory already computed by shoot().
ShootingGradient grad_shoot(const Trajectory& traj, const DeformationParams& d, std::span<const Vec2> gbar_q1);

/// "step,particle,qx,qy,px,py" with header.
std::string trajectory_to_csv(const Trajectory& traj);

/// Axis-aligned lattice covering [0, width-1] x [0, height-1]; the far edge
/// is always included, so a spacing beyond the extent leaves the four corners.
struct Lattice {
  int cols = 0;
  int rows = 0;
  Points nodes;  // row-major, cols * rows
};

Lattice make_lattice(double width, double height, double spacing);

}  // namespace vseg
