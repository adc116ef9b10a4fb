#pragma once

#include <span>
#include <string>
#include <vector>

#include "vseg/gradfield.hpp"
#include "vseg/imageio.hpp"
#include "vseg/lddmm.hpp"
#include "vseg/segmenter.hpp"
#include "vseg/varifold.hpp"

// Text renderings of pipeline results. Every CSV number is printed with 9
// significant digits and lines end in '\n'.
namespace vseg::out {

/// "x,y" per vertex, closing vertex not repeated.
std::string contour_csv(const PolyCurve& c);
/// "iter,total,reg,loss,alpha" header plus one line per record.
std::string energy_csv(std::span<const EnergyRecord> history);
/// "qx,qy,px,py" header plus one line per control point.
std::string momenta_csv(const ShootingState& s);
/// Accepts the momenta_csv layout, header optional. Throws Error(Format).
ShootingState parse_momenta_csv(const std::string& text);

/// Image, final polygon, and optional snapshot polygons.
std::string overlay_svg(const Image& img, const PolyCurve& final_curve, std::span<const Snapshot> snapshots);
/// One segment per field atom, centred on its pixel, length proportional to mass.
std::string quiver_svg(const Image& img, const GradientField& field);

/// Deformed lattice (rows and columns as polylines, class "grid") with the
/// control-point paths drawn up to `upto_step`.
std::string grid_svg(double width, double height, const Lattice& lattice, std::span<const Vec2> nodes,
                     const Trajectory& traj, int upto_step);

}  // namespace vseg::out
