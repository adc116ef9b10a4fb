#include "vseg/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "vseg/errors.hpp"

namespace vseg::out {

namespace {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt_svg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string svg_open(double width, double height) {
  const std::string w = fmt_svg(width), h = fmt_svg(height);
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + w + "px\" height=\"" + h +
         "px\" viewBox=\"-0.5 -0.5 " + w + " " + h + "\">\n";
}

// Pixels as horizontal runs of equal 8-bit gray over a black backdrop.
std::string raster(const Image& img) {
  std::string s = "<g id=\"image\" shape-rendering=\"crispEdges\">\n<rect x=\"-0.5\" y=\"-0.5\" width=\"" +
                  std::to_string(img.width()) + "\" height=\"" + std::to_string(img.height()) +
                  "\" fill=\"#000000\"/>\n";
  auto level = [](double v) { return static_cast<int>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0)); };
  char buf[128];
  for (int y = 0; y < img.height(); ++y) {
    int x = 0;
    while (x < img.width()) {
      const int g = level(img(x, y));
      int end = x + 1;
      while (end < img.width() && level(img(end, y)) == g) ++end;
      if (g > 0) {
        std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%d\" height=\"1\" fill=\"#%02x%02x%02x\"/>\n",
                      x - 0.5, y - 0.5, end - x, g, g, g);
        s += buf;
      }
      x = end;
    }
  }
  return s + "</g>\n";
}

std::string points_attr(std::span<const Vec2> pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += fmt_svg(pts[i].x) + "," + fmt_svg(pts[i].y);
  }
  return s;
}

std::string polygon(std::span<const Vec2> pts, const char* stroke, double width, const char* cls) {
  return std::string("<polygon class=\"") + cls + "\" points=\"" + points_attr(pts) +
         "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt_svg(width) + "\"/>\n";
}

std::string polyline(std::span<const Vec2> pts, const char* stroke, double width, const char* cls) {
  return std::string("<polyline class=\"") + cls + "\" points=\"" + points_attr(pts) +
         "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt_svg(width) + "\"/>\n";
}

}  // namespace

std::string contour_csv(const PolyCurve& c) {
  std::string s;
  for (const auto& v : c.vertices) s += fmt9(v.x) + "," + fmt9(v.y) + "\n";
  return s;
}

std::string energy_csv(std::span<const EnergyRecord> history) {
  std::string s = "iter,total,reg,loss,alpha\n";
  for (const auto& r : history)
    s += std::to_string(r.iteration) + "," + fmt9(r.total) + "," + fmt9(r.reg) + "," + fmt9(r.loss) + "," +
         fmt9(r.alpha) + "\n";
  return s;
}

std::string momenta_csv(const ShootingState& st) {
  std::string s = "qx,qy,px,py\n";
  for (std::size_t i = 0; i < st.q.size(); ++i)
    s += fmt9(st.q[i].x) + "," + fmt9(st.q[i].y) + "," + fmt9(st.p[i].x) + "," + fmt9(st.p[i].y) + "\n";
  return s;
}

ShootingState parse_momenta_csv(const std::string& text) {
  ShootingState st;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("qx", 0) == 0) continue;
    double v[4];
    int consumed = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf%n", &v[0], &v[1], &v[2], &v[3], &consumed) != 4 ||
        static_cast<std::size_t>(consumed) != line.size())
      throw Error(ErrorKind::Format, "momenta line " + std::to_string(lineno) + " is not 'qx,qy,px,py'");
    st.q.push_back({v[0], v[1]});
    st.p.push_back({v[2], v[3]});
  }
  if (st.q.empty()) throw Error(ErrorKind::Format, "momenta file has no control points");
  return st;
}

std::string overlay_svg(const Image& img, const PolyCurve& final_curve, std::span<const Snapshot> snapshots) {
  std::string s = svg_open(img.width(), img.height()) + raster(img);
  for (const auto& snap : snapshots) s += polygon(snap.curve.vertices, "#3399ff", 0.4, "snapshot");
  s += polygon(final_curve.vertices, "#ff2020", 0.8, "final");
  return s + "</svg>\n";
}

std::string quiver_svg(const Image& img, const GradientField& field) {
  std::string s = svg_open(img.width(), img.height()) + raster(img) + "<g id=\"field\" stroke=\"#ff8800\" stroke-width=\"0.15\">\n";
  double max_mass = 0.0;
  for (double m : field.masses) max_mass = std::max(max_mass, m);
  const double scale = max_mass > 0.0 ? 0.9 / max_mass : 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Vec2 half = field.dirs[i] * (0.5 * scale * field.masses[i]);
    const Vec2 a = field.points[i] - half, b = field.points[i] + half;
    s += "<line x1=\"" + fmt_svg(a.x) + "\" y1=\"" + fmt_svg(a.y) + "\" x2=\"" + fmt_svg(b.x) + "\" y2=\"" +
         fmt_svg(b.y) + "\"/>\n";
  }
  return s + "</g>\n</svg>\n";
}

std::string grid_svg(double width, double height, const Lattice& lattice, std::span<const Vec2> nodes,
                     const Trajectory& traj, int upto_step) {
  std::string s = svg_open(width, height) + "<rect x=\"-0.5\" y=\"-0.5\" width=\"" + fmt_svg(width) +
                  "\" height=\"" + fmt_svg(height) + "\" fill=\"#ffffff\"/>\n";
  Points line;
  for (int r = 0; r < lattice.rows; ++r) {
    line.assign(nodes.begin() + static_cast<std::ptrdiff_t>(r) * lattice.cols,
                nodes.begin() + static_cast<std::ptrdiff_t>(r + 1) * lattice.cols);
    s += polyline(line, "#404040", 0.3, "grid");
  }
  for (int c = 0; c < lattice.cols; ++c) {
    line.clear();
    for (int r = 0; r < lattice.rows; ++r) line.push_back(nodes[static_cast<std::size_t>(r) * lattice.cols + c]);
    s += polyline(line, "#404040", 0.3, "grid");
  }
  if (!traj.empty()) {
    const int last = std::clamp(upto_step, 0, static_cast<int>(traj.size()) - 1);
    for (std::size_t i = 0; i < traj.front().q.size(); ++i) {
      line.clear();
      for (int t = 0; t <= last; ++t) line.push_back(traj[t].q[i]);
      s += polyline(line, "#e02020", 0.5, "path");
    }
  }
  return s + "</svg>\n";
}

}  // namespace vseg::out
