#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vseg/errors.hpp"
#include "vseg/gradfield.hpp"
#include "vseg/imageio.hpp"
#include "vseg/lddmm.hpp"
#include "vseg/segmenter.hpp"
#include "vseg/varifold.hpp"

namespace py = pybind11;
using namespace vseg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Points to_points(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error("expected an (n, 2) array");
  Points out(a.shape(0));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = {r(i, 0), r(i, 1)};
  return out;
}

Array from_points(const Points& pts) {
  Array a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{2}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w(i, 0) = pts[i].x;
    w(i, 1) = pts[i].y;
  }
  return a;
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array from_vector(const std::vector<double>& v) {
  Array a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Image to_image(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a (height, width) array");
  return Image(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
               std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_image(const Image& img) {
  Array a({static_cast<py::ssize_t>(img.height()), static_cast<py::ssize_t>(img.width())});
  std::copy(img.pixels().begin(), img.pixels().end(), a.mutable_data());
  return a;
}

std::vector<Edge> to_edges(const py::array_t<int, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw py::value_error("expected an (m, 2) integer array");
  std::vector<Edge> out(a.shape(0));
  auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = {r(i, 0), r(i, 1)};
  return out;
}

py::array_t<int> from_edges(const std::vector<Edge>& e) {
  py::array_t<int> a({static_cast<py::ssize_t>(e.size()), py::ssize_t{2}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < e.size(); ++i) {
    w(i, 0) = e[i][0];
    w(i, 1) = e[i][1];
  }
  return a;
}

PolyCurve to_curve(const Array& vertices, const py::object& edges) {
  if (edges.is_none()) return PolyCurve::closed(to_points(vertices));
  return {to_points(vertices), to_edges(edges.cast<py::array_t<int, py::array::c_style | py::array::forcecast>>())};
}

py::dict curve_dict(const PolyCurve& c) {
  py::dict d;
  d["vertices"] = from_points(c.vertices);
  d["edges"] = from_edges(c.edges);
  return d;
}

VarifoldAtoms to_atoms(const Array& centers, const Array& dirs, const Array& masses) {
  VarifoldAtoms a{to_points(centers), to_points(dirs), to_vector(masses)};
  if (a.dirs.size() != a.size() || a.masses.size() != a.size())
    throw py::value_error("centers, dirs and masses must have equal length");
  return a;
}

py::dict atoms_dict(const VarifoldAtoms& a) {
  py::dict d;
  d["centers"] = from_points(a.centers);
  d["dirs"] = from_points(a.dirs);
  d["masses"] = from_vector(a.masses);
  return d;
}

GradientField to_field(const Array& points, const Array& dirs, const Array& masses) {
  GradientField f{to_points(points), to_points(dirs), to_vector(masses)};
  if (f.dirs.size() != f.size() || f.masses.size() != f.size())
    throw py::value_error("points, dirs and masses must have equal length");
  return f;
}

py::dict field_dict(const GradientField& f) {
  py::dict d;
  d["points"] = from_points(f.points);
  d["dirs"] = from_points(f.dirs);
  d["masses"] = from_vector(f.masses);
  return d;
}

SegmentationConfig to_config(const py::dict& kw) {
  SegmentationConfig c;
  for (auto item : kw) {
    const auto key = item.first.cast<std::string>();
    const py::handle v = item.second;
    if (key == "sigma_var") c.sigma_var = v.is_none() ? std::nullopt : std::optional<double>(v.cast<double>());
    else if (key == "sigma_v") c.sigma_v = v.is_none() ? std::nullopt : std::optional<double>(v.cast<double>());
    else if (key == "nsteps") c.nsteps = v.cast<int>();
    else if (key == "lambda_loss") c.lambda_loss = v.cast<double>();
    else if (key == "loss") c.loss = parse_loss_kind(v.cast<std::string>());
    else if (key == "threshold_rel") c.threshold_rel = v.cast<double>();
    else if (key == "smooth_sigma") c.smooth_sigma = v.cast<double>();
    else if (key == "mass_mode") c.mass_mode = parse_mass_mode(v.cast<std::string>());
    else if (key == "ellipse_k") c.ellipse_k = v.cast<double>();
    else if (key == "n_vertices") c.n_vertices = v.cast<int>();
    else if (key == "adam_lr") c.adam.lr = v.cast<double>();
    else if (key == "adam_beta1") c.adam.beta1 = v.cast<double>();
    else if (key == "adam_beta2") c.adam.beta2 = v.cast<double>();
    else if (key == "adam_eps") c.adam.eps = v.cast<double>();
    else if (key == "iterations") c.iterations = v.cast<int>();
    else if (key == "snapshot_every") c.snapshot_every = v.cast<int>();
    else if (key == "seed") c.seed = v.cast<std::uint64_t>();
    else throw py::key_error("unknown config key '" + key + "'");
  }
  validate(c);
  return c;
}

py::dict energy_dict(const EnergyRecord& r) {
  py::dict d;
  d["iteration"] = r.iteration;
  d["total"] = r.total;
  d["reg"] = r.reg;
  d["loss"] = r.loss;
  d["alpha"] = r.alpha;
  return d;
}

py::dict result_dict(const SegmentationResult& r) {
  py::dict d;
  d["template"] = curve_dict(r.template_curve);
  d["final_curve"] = curve_dict(r.final_curve);
  d["p0"] = from_points(r.p0);
  py::list hist;
  for (const auto& e : r.energy_history) hist.append(energy_dict(e));
  d["energy_history"] = hist;
  py::list snaps;
  for (const auto& s : r.snapshots) snaps.append(py::make_tuple(s.iteration, curve_dict(s.curve)));
  d["snapshots"] = snaps;
  d["warnings"] = r.warnings;
  return d;
}

py::list trajectory_list(const Trajectory& t) {
  py::list out;
  for (const auto& s : t) out.append(py::make_tuple(from_points(s.q), from_points(s.p)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_vseg, m) {
  m.doc() = "Template-curve image segmentation with LDDMM geodesic shooting and varifold losses";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  // imageio
  m.def("load_pgm", [](py::bytes b) {
    const std::string s = b;
    return from_image(load_pgm({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
  }, py::arg("data"));
  m.def("save_pgm", [](const Array& img, bool binary) {
    const auto bytes = save_pgm(to_image(img), binary);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  }, py::arg("image"), py::arg("binary") = true);
  m.def("add_gaussian_noise", [](const Array& img, double stddev, std::uint64_t seed) {
    return from_image(add_gaussian_noise(to_image(img), stddev, seed));
  }, py::arg("image"), py::arg("stddev"), py::arg("seed") = 0);
  m.def("add_salt_pepper", [](const Array& img, double density, std::uint64_t seed) {
    return from_image(add_salt_pepper(to_image(img), density, seed));
  }, py::arg("image"), py::arg("density"), py::arg("seed") = 0);

  // gradfield
  m.def("gaussian_smooth", [](const Array& img, double sigma) {
    return from_image(gaussian_smooth(to_image(img), sigma));
  }, py::arg("image"), py::arg("sigma"));
  m.def("compute_gradient", [](const Array& img) {
    const VectorImage g = compute_gradient(to_image(img));
    py::array_t<double> a({static_cast<py::ssize_t>(g.height), static_cast<py::ssize_t>(g.width), py::ssize_t{2}});
    auto w = a.mutable_unchecked<3>();
    for (int y = 0; y < g.height; ++y)
      for (int x = 0; x < g.width; ++x) {
        w(y, x, 0) = g.at(x, y).x;
        w(y, x, 1) = g.at(x, y).y;
      }
    return a;
  }, py::arg("image"), "Returns a (height, width, 2) array of (d/dx, d/dy).");
  m.def("extract_field", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& g,
                            double threshold_rel, const std::string& mass_mode) {
    if (g.ndim() != 3 || g.shape(2) != 2) throw py::value_error("expected a (height, width, 2) array");
    VectorImage vi{static_cast<int>(g.shape(1)), static_cast<int>(g.shape(0)), {}};
    auto r = g.unchecked<3>();
    for (int y = 0; y < vi.height; ++y)
      for (int x = 0; x < vi.width; ++x) vi.vectors.push_back({r(y, x, 0), r(y, x, 1)});
    return field_dict(extract_field(vi, threshold_rel, parse_mass_mode(mass_mode)));
  }, py::arg("gradient"), py::arg("threshold_rel") = 0.2, py::arg("mass_mode") = "unit");

  // varifold
  m.def("curve_to_atoms", [](const Array& vertices, const py::object& edges) {
    return atoms_dict(curve_to_atoms(to_curve(vertices, edges)));
  }, py::arg("vertices"), py::arg("edges") = py::none());
  m.def("inner_product", [](const Array& ca, const Array& da, const Array& ma, const Array& cb, const Array& db,
                            const Array& mb, double sigma) {
    return inner_product(to_atoms(ca, da, ma), to_atoms(cb, db, mb), {sigma});
  }, py::arg("centers_a"), py::arg("dirs_a"), py::arg("masses_a"), py::arg("centers_b"), py::arg("dirs_b"),
        py::arg("masses_b"), py::arg("sigma"));
  m.def("loss_L0", [](const Array& ca, const Array& da, const Array& ma, const Array& ci, const Array& di,
                      const Array& mi, double sigma) {
    return loss_L0(to_atoms(ca, da, ma), to_atoms(ci, di, mi), {sigma});
  }, py::arg("curve_centers"), py::arg("curve_dirs"), py::arg("curve_masses"), py::arg("image_centers"),
        py::arg("image_dirs"), py::arg("image_masses"), py::arg("sigma"));
  m.def("loss_L1", [](const Array& ca, const Array& da, const Array& ma, const Array& ci, const Array& di,
                      const Array& mi, double sigma) {
    const auto r = loss_L1(to_atoms(ca, da, ma), to_atoms(ci, di, mi), KernelParams{sigma});
    return py::make_tuple(r.loss, r.alpha);
  }, py::arg("curve_centers"), py::arg("curve_dirs"), py::arg("curve_masses"), py::arg("image_centers"),
        py::arg("image_dirs"), py::arg("image_masses"), py::arg("sigma"), "Returns (loss, alpha).");
  m.def("grad_loss_L1", [](const Array& vertices, const py::object& edges, const Array& ci, const Array& di,
                           const Array& mi, double sigma) {
    return from_points(grad_loss_L1(to_curve(vertices, edges), to_atoms(ci, di, mi), {sigma}));
  }, py::arg("vertices"), py::arg("edges"), py::arg("image_centers"), py::arg("image_dirs"),
        py::arg("image_masses"), py::arg("sigma"));

  // lddmm
  m.def("hamiltonian", [](const Array& q, const Array& p, double sigma_v) {
    return hamiltonian({to_points(q), to_points(p)}, {sigma_v, 1});
  }, py::arg("q"), py::arg("p"), py::arg("sigma_v"));
  m.def("reg_energy", [](const Array& q, const Array& p, double sigma_v) {
    return reg_energy({to_points(q), to_points(p)}, {sigma_v, 1});
  }, py::arg("q"), py::arg("p"), py::arg("sigma_v"));
  m.def("shoot", [](const Array& q, const Array& p, double sigma_v, int nsteps) {
    return trajectory_list(shoot({to_points(q), to_points(p)}, {sigma_v, nsteps}));
  }, py::arg("q"), py::arg("p"), py::arg("sigma_v"), py::arg("nsteps") = 10,
        "Returns a list of nsteps + 1 (q, p) pairs.");
  m.def("flow_points", [](const Array& q, const Array& p, double sigma_v, int nsteps, const Array& xs) {
    const DeformationParams d{sigma_v, nsteps};
    return from_points(flow_points(shoot({to_points(q), to_points(p)}, d), d, to_points(xs)));
  }, py::arg("q"), py::arg("p"), py::arg("sigma_v"), py::arg("nsteps"), py::arg("points"));
  m.def("grad_shoot", [](const Array& q, const Array& p, double sigma_v, int nsteps, const Array& gbar_q1) {
    const auto g = grad_shoot(ShootingState{to_points(q), to_points(p)}, DeformationParams{sigma_v, nsteps},
                              to_points(gbar_q1));
    return py::make_tuple(from_points(g.gq0), from_points(g.gp0));
  }, py::arg("q"), py::arg("p"), py::arg("sigma_v"), py::arg("nsteps"), py::arg("gbar_q1"),
        "Returns (dq0, dp0).");

  // segmenter
  m.def("init_ellipse", [](const Array& pts, const Array& dirs, const Array& masses, double k, int n) {
    return curve_dict(init_ellipse(to_field(pts, dirs, masses), k, n));
  }, py::arg("points"), py::arg("dirs"), py::arg("masses"), py::arg("k") = 2.0, py::arg("n_vertices") = 48);
  m.def("total_energy", [](const Array& p0, const Array& vertices, const py::object& edges, const Array& pts,
                           const Array& dirs, const Array& masses, const py::dict& cfg) {
    return energy_dict(total_energy(to_points(p0), to_curve(vertices, edges), to_field(pts, dirs, masses),
                                    to_config(cfg)));
  }, py::arg("p0"), py::arg("vertices"), py::arg("edges"), py::arg("points"), py::arg("dirs"), py::arg("masses"),
        py::arg("config"), "config must set sigma_var and sigma_v.");
  m.def("grad_total_energy", [](const Array& p0, const Array& vertices, const py::object& edges, const Array& pts,
                                const Array& dirs, const Array& masses, const py::dict& cfg) {
    return from_points(grad_total_energy(to_points(p0), to_curve(vertices, edges), to_field(pts, dirs, masses),
                                         to_config(cfg)));
  }, py::arg("p0"), py::arg("vertices"), py::arg("edges"), py::arg("points"), py::arg("dirs"), py::arg("masses"),
        py::arg("config"));
  m.def("segment", [](const Array& img, const py::dict& cfg) {
    SegmentationResult r;
    const Image image = to_image(img);
    const SegmentationConfig c = to_config(cfg);
    {
      py::gil_scoped_release release;
      r = segment(image, c);
    }
    return result_dict(r);
  }, py::arg("image"), py::arg("config") = py::dict(),
        "Segments an image given as a (height, width) array in [0, 1]; config keys mirror the CLI JSON config.");
  m.def("is_simple_polygon", [](const Array& v) { return is_simple_polygon(to_points(v)); }, py::arg("vertices"));
}
