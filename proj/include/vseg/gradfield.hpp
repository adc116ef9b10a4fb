#pragma once

#include <string>
#include <vector>

#include "vseg/geometry.hpp"
#include "vseg/imageio.hpp"

namespace vseg {

/// Per-pixel gradient, row-major.
struct VectorImage {
  int width = 0;
  int height = 0;
  Points vectors;

  const Vec2& at(int x, int y) const { return vectors[static_cast<std::size_t>(y) * width + x]; }
};

enum class MassMode { Unit, Magnitude };

MassMode parse_mass_mode(const std::string& s);
const char* to_string(MassMode m);

/// Retained gradient pixels: positions, unit directions and masses, row-major order.
struct GradientField {
  Points points;
  Points dirs;
  std::vector<double> masses;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Separable Gaussian blur, radius ceil(3 sigma), weights renormalized,
/// replicate-edge boundary. sigma == 0 is the identity.
Image gaussian_smooth(const Image& img, double sigma);

/// The 1D kernel gaussian_smooth applies along each axis (offsets -r..r).
std::vector<double> gaussian_kernel_1d(double sigma);

/// Centered differences on interior pixels; the one-pixel frame is zero.
/// Requires a 3x3 image or larger.
VectorImage compute_gradient(const Image& img);

/// Keeps pixels with |g| >= threshold_rel * max|g| and |g| > 0.
/// Throws Error(EmptyField) when the gradient vanishes everywhere.
GradientField extract_field(const VectorImage& grad, double threshold_rel, MassMode mode = MassMode::Unit);

/// "x,y,dx,dy,mass" lines, 9 significant digits, no header.
std::string field_to_csv(const GradientField& field);

}  // namespace vseg
