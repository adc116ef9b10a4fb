#include "vseg/gradfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vseg/errors.hpp"

namespace vseg {

MassMode parse_mass_mode(const std::string& s) {
  if (s == "unit") return MassMode::Unit;
  if (s == "magnitude") return MassMode::Magnitude;
  throw Error(ErrorKind::Argument, "mass mode must be 'unit' or 'magnitude', got '" + s + "'");
}

const char* to_string(MassMode m) { return m == MassMode::Unit ? "unit" : "magnitude"; }

std::vector<double> gaussian_kernel_1d(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::Argument, "smoothing sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    w[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += w[i + radius];
  }
  for (double& v : w) v /= sum;
  return w;
}

Image gaussian_smooth(const Image& img, double sigma) {
  const auto w = gaussian_kernel_1d(sigma);
  if (w.size() == 1) return img;
  const int r = static_cast<int>(w.size() / 2);
  const int W = img.width();
  const int H = img.height();

  Image tmp(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += w[k + r] * img(std::clamp(x + k, 0, W - 1), y);
      tmp(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  Image out(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k) acc += w[k + r] * tmp(x, std::clamp(y + k, 0, H - 1));
      out(x, y) = std::clamp(acc, 0.0, 1.0);
    }
  return out;
}

VectorImage compute_gradient(const Image& img) {
  const int W = img.width();
  const int H = img.height();
  if (W < 3 || H < 3) throw Error(ErrorKind::Size, "gradient needs an image of at least 3x3 pixels");
  VectorImage g{W, H, Points(static_cast<std::size_t>(W) * H)};
  for (int y = 1; y < H - 1; ++y)
    for (int x = 1; x < W - 1; ++x)
      g.vectors[static_cast<std::size_t>(y) * W + x] = {(img(x + 1, y) - img(x - 1, y)) / 2.0,
                                                        (img(x, y + 1) - img(x, y - 1)) / 2.0};
  return g;
}

GradientField extract_field(const VectorImage& grad, double threshold_rel, MassMode mode) {
  if (!(threshold_rel >= 0.0 && threshold_rel <= 1.0))
    throw Error(ErrorKind::Argument, "threshold must lie in [0,1]");
  double max_mag = 0.0;
  for (const auto& v : grad.vectors) max_mag = std::max(max_mag, norm(v));
  if (max_mag == 0.0) throw Error(ErrorKind::EmptyField, "empty gradient field: image gradient is zero everywhere");

  const double cut = threshold_rel * max_mag;
  GradientField f;
  for (int y = 0; y < grad.height; ++y)
    for (int x = 0; x < grad.width; ++x) {
      const Vec2& g = grad.at(x, y);
      const double mag = norm(g);
      if (mag > 0.0 && mag >= cut) {
        f.points.push_back({static_cast<double>(x), static_cast<double>(y)});
        f.dirs.push_back(g * (1.0 / mag));
        f.masses.push_back(mode == MassMode::Unit ? 1.0 : mag);
      }
    }
  return f;
}

std::string field_to_csv(const GradientField& field) {
  std::string out;
  char line[160];
  for (std::size_t i = 0; i < field.size(); ++i) {
    std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g,%.9g,%.9g\n", field.points[i].x, field.points[i].y,
                  field.dirs[i].x, field.dirs[i].y, field.masses[i]);
    out += line;
  }
  return out;
}

}  // namespace vseg
