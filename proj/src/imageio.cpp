#include "vseg/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "vseg/errors.hpp"

namespace vseg {

Image::Image(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::Argument, "image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorKind::Argument, "pixel count does not match width*height");
  for (double v : pixels_)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::Argument, "intensity outside [0,1]");
}

Image::Image(int width, int height, double value)
    : Image(width, height, std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) *
                                                   static_cast<std::size_t>(std::max(height, 0)),
                                               value)) {}

namespace {

class PgmReader {
 public:
  explicit PgmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads one token.
  std::string_view token() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
    return {reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start};
  }

  // Header integer; `what` names the field in diagnostics.
  long header_int(const char* what) {
    auto tok = token();
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
      throw Error(ErrorKind::Header, std::string("invalid PGM ") + what);
    return v;
  }

  // The single whitespace byte that separates maxval from binary samples.
  void raster_separator() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw Error(ErrorKind::Truncation, "missing raster after PGM header");
    ++pos_;
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }
  bool at_end() {
    skip_space_and_comments();
    return pos_ >= bytes_.size();
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw Error(ErrorKind::Format, "unsupported magic, expected P2 or P5");
  const bool binary = bytes[1] == '5';
  PgmReader in(bytes.subspan(2));

  const long width = in.header_int("width");
  const long height = in.header_int("height");
  const long maxval = in.header_int("maxval");
  if (width <= 0 || height <= 0 || width > (1L << 20) || height > (1L << 20))
    throw Error(ErrorKind::Header, "PGM dimensions out of range");
  if (maxval < 1 || maxval > 65535) throw Error(ErrorKind::Header, "PGM maxval outside [1, 65535]");

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> pixels(count);
  const double scale = 1.0 / static_cast<double>(maxval);

  auto store = [&](std::size_t i, long sample) {
    if (sample < 0 || sample > maxval) throw Error(ErrorKind::Format, "PGM sample exceeds maxval");
    pixels[i] = static_cast<double>(sample) * scale;
  };

  if (binary) {
    in.raster_separator();
    const std::size_t width_bytes = maxval > 255 ? 2 : 1;
    auto raster = in.rest();
    if (raster.size() < count * width_bytes)
      throw Error(ErrorKind::Truncation, "PGM raster has " + std::to_string(raster.size() / width_bytes) +
                                             " samples, expected " + std::to_string(count));
    for (std::size_t i = 0; i < count; ++i) {
      long sample = width_bytes == 2 ? (long{raster[2 * i]} << 8) | raster[2 * i + 1] : long{raster[i]};
      store(i, sample);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      auto tok = in.token();
      if (tok.empty())
        throw Error(ErrorKind::Truncation,
                    "PGM raster has " + std::to_string(i) + " samples, expected " + std::to_string(count));
      long sample = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), sample);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw Error(ErrorKind::Format, "non-numeric PGM sample");
      store(i, sample);
    }
    if (!in.at_end()) throw Error(ErrorKind::Truncation, "PGM raster has more samples than width*height");
  }
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

Image load_pgm_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Format, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return load_pgm(bytes);
}

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0));
}

}  // namespace

std::vector<std::uint8_t> save_pgm(const Image& img, bool binary) {
  std::string header = std::string(binary ? "P5" : "P2") + "\n" + std::to_string(img.width()) + " " +
                       std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  if (binary) {
    out.reserve(out.size() + img.size());
    for (double v : img.pixels()) out.push_back(quantize(v));
    return out;
  }
  std::string body;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (x > 0) body += ' ';
      body += std::to_string(quantize(img(x, y)));
    }
    body += '\n';
  }
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void save_pgm_file(const Image& img, const std::string& path, bool binary) {
  auto bytes = save_pgm(img, binary);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Format, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NoiseSource::NoiseSource(std::uint64_t seed) : engine_(seed) {}

double NoiseSource::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double NoiseSource::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // 1 - u lies in (0, 1], keeping the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

Image add_gaussian_noise(const Image& img, double stddev, std::uint64_t seed) {
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) throw Error(ErrorKind::Argument, "stddev must be >= 0");
  if (stddev == 0.0) return img;
  NoiseSource rng(seed);
  std::vector<double> out(img.pixels().begin(), img.pixels().end());
  for (double& v : out) v = std::clamp(v + stddev * rng.normal(), 0.0, 1.0);
  return Image(img.width(), img.height(), std::move(out));
}

Image add_salt_pepper(const Image& img, double density, std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) throw Error(ErrorKind::Argument, "density must lie in [0,1]");
  NoiseSource rng(seed);
  std::vector<double> out(img.pixels().begin(), img.pixels().end());
  for (double& v : out) {
    // Two draws per pixel regardless of outcome, so pixel k always sees draws 2k and 2k+1.
    const double hit = rng.uniform();
    const double coin = rng.uniform();
    if (hit < density) v = coin < 0.5 ? 0.0 : 1.0;
  }
  return Image(img.width(), img.height(), std::move(out));
}

}  // namespace vseg
