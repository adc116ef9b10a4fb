#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace vseg {

/// Grayscale raster with intensities in [0, 1], row-major, y pointing down.
class Image {
 public:
  Image() = default;
  /// Throws Error(Argument) if a dimension is zero, the pixel count is wrong,
  /// or any intensity lies outside [0, 1].
  Image(int width, int height, std::vector<double> pixels);
  /// Constant image.
  Image(int width, int height, double value = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  double operator()(int x, int y) const { return pixels_[index(x, y)]; }
  double& operator()(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const double> pixels() const { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Parses a P2 (ASCII) or P5 (binary) PGM stream. Samples are scaled by 1/maxval.
Image load_pgm(std::span<const std::uint8_t> bytes);
Image load_pgm_file(const std::string& path);

/// Writes maxval 255 with half-up rounding of intensity*255.
std::vector<std::uint8_t> save_pgm(const Image& img, bool binary);
void save_pgm_file(const Image& img, const std::string& path, bool binary);

/// Deterministic uniform/normal source shared by the noise operations.
///
/// Uniforms take the top 53 bits of std::mt19937_64 (a sequence fixed by the
/// C++ standard); normals use the Box-Muller transform, consuming two uniforms
/// per pair and caching the second variate.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed);
  double uniform();  // [0, 1)
  double normal();   // N(0, 1)

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

Image add_gaussian_noise(const Image& img, double stddev, std::uint64_t seed);
Image add_salt_pepper(const Image& img, double density, std::uint64_t seed);

}  // namespace vseg
