// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "mvseg/annulus.hpp"
#include "mvseg/error.hpp"
#include "mvseg/filters.hpp"
#include "mvseg/mesh_io.hpp"
#include "mvseg/metrics.hpp"
#include "mvseg/nrrd.hpp"
#include "mvseg/parallel.hpp"
#include "mvseg/phantom.hpp"
#include "mvseg/pipeline.hpp"
#include "mvseg/session.hpp"
#include "mvseg/surface.hpp"
#include "mvseg/version.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Arrays are indexed [i, j, k] (Fortran order), matching the library's linear layout.
template <typename T>
py::array_t<T> to_array(const mvseg::Geometry& g, const std::vector<T>& samples) {
  const auto d = g.dims;
  py::array_t<T, py::array::f_style> out({d[0], d[1], d[2]});
  std::copy(samples.begin(), samples.end(), out.mutable_data());
  return out;
}

mvseg::Geometry geometry_from(const std::string& geometry_json) {
  mvseg::Geometry out;
  const json j = json::parse(geometry_json);
  for (int a = 0; a < 3; ++a) {
    out.dims[a] = j.at("dims").at(a).get<int>();
    if (j.contains("spacing")) out.spacing[a] = j.at("spacing").at(a).get<double>();
    if (j.contains("origin")) out.origin[a] = j.at("origin").at(a).get<double>();
    if (j.contains("orientation"))
      for (int b = 0; b < 3; ++b) out.orientation(a, b) = j.at("orientation").at(a).at(b).get<double>();
  }
  out.validate();
  return out;
}

template <typename T>
std::vector<T> from_array(const mvseg::Geometry& g, const py::array& a) {
  auto arr = py::array_t<T, py::array::f_style | py::array::forcecast>::ensure(a);
  if (!arr || arr.ndim() != 3 || arr.shape(0) != g.dims[0] || arr.shape(1) != g.dims[1] ||
      arr.shape(2) != g.dims[2])
    throw mvseg::Error(mvseg::ErrorCode::kGeometryMismatch, "array shape does not match dims", "array");
  return std::vector<T>(arr.data(), arr.data() + arr.size());
}

json geometry_json(const mvseg::Geometry& g) {
  json orient = json::array();
  for (int r = 0; r < 3; ++r)
    orient.push_back({g.orientation(r, 0), g.orientation(r, 1), g.orientation(r, 2)});
  return {{"dims", {g.dims[0], g.dims[1], g.dims[2]}},
          {"spacing", {g.spacing[0], g.spacing[1], g.spacing[2]}},
          {"origin", {g.origin[0], g.origin[1], g.origin[2]}},
          {"orientation", orient}};
}

mvseg::TriMesh mesh_from(const py::array& vertices, const py::array& triangles) {
  auto v = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(vertices);
  auto t = py::array_t<int, py::array::c_style | py::array::forcecast>::ensure(triangles);
  if (!v || v.ndim() != 2 || v.shape(1) != 3 || !t || t.ndim() != 2 || t.shape(1) != 3)
    throw mvseg::Error(mvseg::ErrorCode::kInvalidArgument, "expected (n, 3) arrays", "mesh");
  mvseg::TriMesh m;
  for (py::ssize_t r = 0; r < v.shape(0); ++r) m.vertices.emplace_back(v.at(r, 0), v.at(r, 1), v.at(r, 2));
  for (py::ssize_t r = 0; r < t.shape(0); ++r) m.triangles.push_back({t.at(r, 0), t.at(r, 1), t.at(r, 2)});
  m.validate();
  m.compute_normals();
  return m;
}

py::tuple mesh_to(const mvseg::TriMesh& m) {
  py::array_t<double> v({static_cast<py::ssize_t>(m.vertices.size()), py::ssize_t{3}});
  py::array_t<int> t({static_cast<py::ssize_t>(m.triangles.size()), py::ssize_t{3}});
  auto vv = v.mutable_unchecked<2>();
  auto tt = t.mutable_unchecked<2>();
  for (std::size_t r = 0; r < m.vertices.size(); ++r)
    for (int c = 0; c < 3; ++c) vv(r, c) = m.vertices[r][c];
  for (std::size_t r = 0; r < m.triangles.size(); ++r)
    for (int c = 0; c < 3; ++c) tt(r, c) = m.triangles[r][c];
  return py::make_tuple(v, t);
}

py::bytes bytes(const std::string& s) { return py::bytes(s); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "mvseg native core";
  m.attr("__version__") = mvseg::kVersion;

  // args = (code, message, detail)
  static py::exception<mvseg::Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const mvseg::Error& e) {
      const py::tuple args = py::make_tuple(mvseg::to_string(e.code()), e.what(), e.field());
      PyErr_SetObject(error.ptr(), args.ptr());
    } catch (const json::exception& e) {
      const py::tuple args = py::make_tuple("PARSE_ERROR", e.what(), "json");
      PyErr_SetObject(error.ptr(), args.ptr());
    }
  });

  m.def("set_worker_count", &mvseg::set_worker_count);
  m.def("worker_count", &mvseg::worker_count);

  m.def("read_nrrd", [](py::bytes data) {
    const mvseg::Volume3D v = mvseg::read_nrrd(std::string(data));
    return py::make_tuple(to_array(v.geometry, v.samples), geometry_json(v.geometry).dump());
  });
  m.def("write_nrrd", [](const py::array& a, const std::string& g, bool gzip) {
    const mvseg::Geometry geo = geometry_from(g);
    mvseg::NrrdWriteOptions opts;
    if (gzip) opts.encoding = mvseg::NrrdEncoding::kGzip;
    return bytes(mvseg::write_nrrd(mvseg::Volume3D(geo, from_array<float>(geo, a)), opts));
  }, py::arg("array"), py::arg("geometry"), py::arg("gzip") = false);
  m.def("write_mask_nrrd", [](const py::array& a, const std::string& g) {
    const mvseg::Geometry geo = geometry_from(g);
    return bytes(mvseg::write_mask_nrrd(mvseg::LabelMask(geo, from_array<std::uint8_t>(geo, a))));
  });

  m.def("generate_phantom", [](const std::string& spec_json) {
    const auto spec = mvseg::phantom_spec_from_json(json::parse(spec_json));
    const mvseg::Phantom ph = mvseg::generate_phantom(spec);
    py::dict out;
    out["volume"] = to_array(ph.volume.geometry, ph.volume.samples);
    out["gt_bloodpool"] = to_array(ph.gt_bloodpool.geometry, ph.gt_bloodpool.samples);
    out["gt_leaflet"] = to_array(ph.gt_leaflet.geometry, ph.gt_leaflet.samples);
    out["geometry"] = geometry_json(ph.volume.geometry).dump();
    out["annulus"] = mvseg::annulus_to_json(ph.annulus).dump();
    out["spec"] = mvseg::phantom_spec_to_json(spec).dump();
    return out;
  });
  m.def("phantom_proximal_mesh", [](const std::string& spec_json, double edge_mm) {
    return mesh_to(mvseg::phantom_proximal_mesh(mvseg::phantom_spec_from_json(json::parse(spec_json)), edge_mm));
  }, py::arg("spec"), py::arg("edge_mm") = 0.25);

  m.def("fit_annulus", [](const std::string& def_json) {
    return mvseg::model_summary(mvseg::fit_annulus(mvseg::annulus_from_json(json::parse(def_json)))).dump();
  });

  m.def("compute_speed", [](const py::array& a, const std::string& g, double sigma_mm, std::optional<double> beta) {
    const mvseg::Geometry geo = geometry_from(g);
    const auto s = mvseg::compute_speed(mvseg::Volume3D(geo, from_array<float>(geo, a)), sigma_mm, beta);
    return py::make_tuple(to_array(geo, s.image.samples), s.beta);
  }, py::arg("array"), py::arg("geometry"), py::arg("sigma_mm") = 1.0, py::arg("beta") = py::none());

  m.def("dice", [](const py::array& a, const py::array& b, const std::string& g) {
    const mvseg::Geometry geo = geometry_from(g);
    return mvseg::dice(mvseg::LabelMask(geo, from_array<std::uint8_t>(geo, a)),
                       mvseg::LabelMask(geo, from_array<std::uint8_t>(geo, b)));
  });
  m.def("masd", [](const py::array& va, const py::array& ta, const py::array& vb, const py::array& tb) {
    return mvseg::report_to_json(mvseg::masd(mesh_from(va, ta), mesh_from(vb, tb))).dump();
  });
  m.def("read_mesh", [](py::bytes data, const std::string& format) {
    const std::string s = data;
    return mesh_to(mvseg::parse_mesh_format(format) == mvseg::MeshFormat::kStlBinary ? mvseg::read_stl(s)
                                                                                    : mvseg::read_ply(s));
  });
  m.def("write_mesh", [](const py::array& v, const py::array& t, const std::string& format) {
    return bytes(mvseg::write_mesh(mesh_from(v, t), mvseg::parse_mesh_format(format)));
  });

  py::class_<mvseg::Session>(m, "Session")
      .def_static("from_nrrd", [](py::bytes data, const std::string& config_json) {
        const auto config = config_json.empty() ? mvseg::PipelineConfig{}
                                                : mvseg::config_from_json(json::parse(config_json));
        return mvseg::Session(mvseg::read_nrrd(std::string(data)), config);
      }, py::arg("data"), py::arg("config") = "")
      .def_static("from_phantom", [](const std::string& spec_json, const std::string& config_json) {
        const auto config = config_json.empty() ? mvseg::PipelineConfig{}
                                                : mvseg::config_from_json(json::parse(config_json));
        return mvseg::Session(mvseg::generate_phantom(mvseg::phantom_spec_from_json(json::parse(spec_json))).volume,
                              config);
      }, py::arg("spec"), py::arg("config") = "")
      .def_static("load", [](py::bytes data) { return mvseg::Session::load(std::string(data)); })
      .def("save", [](const mvseg::Session& s) { return bytes(s.save()); })
      .def("stage", [](const mvseg::Session& s) { return std::string(mvseg::to_string(s.stage())); })
      .def("set_annulus", [](mvseg::Session& s, const std::string& def_json) {
        return mvseg::model_summary(s.set_annulus(mvseg::annulus_from_json(json::parse(def_json)))).dump();
      })
      .def("step", [](mvseg::Session& s, const std::string& stage, int iterations, const std::string& params_json) {
        const mvseg::Stage st = mvseg::parse_stage(stage);
        std::optional<mvseg::ContourParams> p;
        if (!params_json.empty()) p = mvseg::params_from_json(json::parse(params_json), s.config().params(st));
        py::gil_scoped_release release;
        return mvseg::to_json(s.step(st, iterations, p)).dump();
      }, py::arg("stage"), py::arg("iterations"), py::arg("params") = "")
      .def("undo", [](mvseg::Session& s) { return mvseg::to_json(s.undo()).dump(); })
      .def("accept", [](mvseg::Session& s, const std::string& stage) {
        return std::string(mvseg::to_string(s.accept(mvseg::parse_stage(stage))));
      })
      .def("extract_surface", [](mvseg::Session& s) { return mvseg::to_json(s.extract_surface()).dump(); })
      .def("summary", [](const mvseg::Session& s) { return s.summary().dump(); })
      .def("slice_png", [](const mvseg::Session& s, const std::string& axis, int index, const std::string& overlay) {
        return bytes(s.slice_png(mvseg::parse_slice_axis(axis), index, mvseg::parse_overlay(overlay)));
      }, py::arg("axis"), py::arg("index"), py::arg("overlay") = "none")
      .def("export", [](const mvseg::Session& s, const std::string& what, const std::string& ext) {
        return bytes(s.export_artifact(mvseg::parse_artifact(what), ext));
      })
      .def("phi", [](const mvseg::Session& s, const std::string& stage) {
        const auto& snaps = s.snapshots(mvseg::parse_stage(stage));
        if (snaps.empty()) throw mvseg::Error(mvseg::ErrorCode::kNotFound, "no snapshot", "stage");
        return to_array(snaps.back().geometry, snaps.back().phi);
      })
      .def("proximal_mesh", [](const mvseg::Session& s) { return mesh_to(s.proximal_mesh()); });
}
