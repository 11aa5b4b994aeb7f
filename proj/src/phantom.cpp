// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

#include "mvseg/error.hpp"

namespace mvseg {
namespace {

constexpr double kMarginMm = 5.0;
constexpr int kAnnulusPoints = 12;

struct Shape {
  Vec3 c;       // cavity center
  double r;     // cavity radius
  Vec3 q;       // cap sphere center
  double rc;    // cap sphere radius (leaflet mid-surface)
  double half;  // half thickness
  double hole;  // radius of the central orifice
  double ring_z;  // height of the atrial-face / wall junction above c
  double ring_rho;

  explicit Shape(const PhantomSpec& s) {
    c = s.center();
    r = s.atrium_radius;
    const double d = s.leaflet_sag;
    rc = (r * r + d * d) / (2.0 * d);
    q = c + Vec3(0, 0, rc - d);
    half = 0.5 * s.leaflet_thickness;
    hole = (1.0 - s.leaflet_coverage) * r;
    const double a = rc - d;
    const double rf = rc - half;
    ring_z = (r * r - rf * rf + a * a) / (2.0 * a);
    ring_rho = std::sqrt(std::max(r * r - ring_z * ring_z, 0.0));
  }

  double rho(const Vec3& p) const { return std::hypot(p.x() - c.x(), p.y() - c.y()); }

  double leaflet_field(const Vec3& p) const {
    return std::max({std::abs((p - q).norm() - rc) - half, (p - c).norm() - r, hole - rho(p)});
  }
  bool in_cavity(const Vec3& p) const { return (p - c).norm() < r; }
  bool in_leaflet(const Vec3& p) const {
    return in_cavity(p) && std::abs((p - q).norm() - rc) <= half && rho(p) >= hole;
  }
  bool in_bloodpool(const Vec3& p) const {
    return in_cavity(p) && (p - q).norm() < rc - half && !in_leaflet(p);
  }
};

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "phantom spec: " + message, field);
}

}  // namespace

void PhantomSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(dims[a] >= 2, "dims", "dims must be >= 2");
    require(spacing[a] > 0.0, "spacing", "spacing must be positive");
  }
  require(atrium_radius > 0.0, "atrium_radius", "atrium_radius must be positive");
  require(leaflet_thickness >= 2.0 * spacing.minCoeff(), "leaflet_thickness",
          "leaflet_thickness must be at least twice the smallest spacing");
  require(leaflet_coverage > 0.0 && leaflet_coverage <= 1.0, "leaflet_coverage",
          "leaflet_coverage must lie in (0, 1]");
  require(leaflet_sag > leaflet_thickness && leaflet_sag < atrium_radius, "leaflet_sag",
          "leaflet_sag must exceed the thickness and stay below the radius");
  require(noise_sigma >= 0.0, "noise_sigma", "noise_sigma must be >= 0");
  const Vec3 c = center();
  for (int a = 0; a < 3; ++a) {
    const double extent = (dims[a] - 1) * spacing[a];
    require(c[a] - atrium_radius >= kMarginMm && c[a] + atrium_radius <= extent - kMarginMm,
            "atrium_radius", "atrium must fit inside the volume with a 5 mm margin");
  }
}

Geometry PhantomSpec::geometry() const {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  return g;
}

Vec3 PhantomSpec::center() const {
  return Vec3(0.5 * (dims[0] - 1) * spacing[0], 0.5 * (dims[1] - 1) * spacing[1],
              0.5 * (dims[2] - 1) * spacing[2]);
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const Shape shape(spec);
  const Geometry g = spec.geometry();
  Phantom ph;
  ph.volume = Volume3D(g, 0.0f);
  ph.gt_bloodpool = LabelMask(g, std::uint8_t{0});
  ph.gt_leaflet = LabelMask(g, std::uint8_t{0});

  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t idx = g.linear(i, j, k);
        const Vec3 p = g.index_to_world(Vec3(i, j, k));
        const bool leaf = shape.in_leaflet(p);
        const bool blood = shape.in_cavity(p) && !leaf;
        ph.gt_leaflet.samples[idx] = leaf;
        ph.gt_bloodpool.samples[idx] = shape.in_bloodpool(p);
        double v = blood ? spec.blood_intensity : spec.tissue_intensity;
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
        ph.volume.samples[idx] = static_cast<float>(v);
      }

  for (int n = 0; n < kAnnulusPoints; ++n) {
    const double phi = 2.0 * std::numbers::pi * n / kAnnulusPoints;
    ph.annulus.points.push_back(shape.c + Vec3(shape.ring_rho * std::cos(phi),
                                               shape.ring_rho * std::sin(phi), shape.ring_z));
  }
  ph.annulus.probe_dir = ph.probe_dir;
  return ph;
}

Volume3D phantom_leaflet_field(const PhantomSpec& spec) {
  spec.validate();
  const Shape shape(spec);
  Volume3D f(spec.geometry(), 0.0f);
  const Geometry& g = f.geometry;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i)
        f.at(i, j, k) = static_cast<float>(shape.leaflet_field(g.index_to_world(Vec3(i, j, k))));
  return f;
}

bool phantom_in_leaflet(const PhantomSpec& spec, const Vec3& p) {
  return Shape(spec).in_leaflet(p);
}

bool phantom_in_bloodpool(const PhantomSpec& spec, const Vec3& p) {
  return Shape(spec).in_bloodpool(p);
}

TriMesh phantom_proximal_mesh(const PhantomSpec& spec, double edge_mm) {
  spec.validate();
  const Shape s(spec);
  const double rf = s.rc - s.half;
  const double a = s.q.z() - s.c.z();
  // Polar angle measured from -z around the cap center.
  const double theta_max = std::acos(std::clamp((a - s.ring_z) / rf, -1.0, 1.0));
  const double theta_min = std::asin(std::clamp(s.hole / rf, 0.0, 1.0));
  const int rings = std::max(2, static_cast<int>(std::ceil((theta_max - theta_min) * rf / edge_mm)));
  const int sectors =
      std::max(12, static_cast<int>(std::ceil(2.0 * std::numbers::pi * s.ring_rho / edge_mm)));
  auto point = [&](double theta, double phi) {
    return Vec3(s.q + rf * Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                -std::cos(theta)));
  };

  TriMesh m;
  const bool pole = theta_min <= 0.0;
  int first_ring = 0;
  if (pole) {
    m.vertices.push_back(point(0.0, 0.0));
    first_ring = 1;
  }
  for (int r = first_ring; r <= rings; ++r) {
    const double theta = theta_min + (theta_max - theta_min) * r / rings;
    for (int k = 0; k < sectors; ++k) m.vertices.push_back(point(theta, 2.0 * std::numbers::pi * k / sectors));
  }
  auto vid = [&](int r, int k) { return (pole ? 1 : 0) + (r - first_ring) * sectors + (k % sectors); };
  // Winding gives normals pointing up, into the atrium.
  if (pole)
    for (int k = 0; k < sectors; ++k) m.triangles.push_back({0, vid(1, k), vid(1, k + 1)});
  for (int r = first_ring; r < rings; ++r)
    for (int k = 0; k < sectors; ++k) {
      m.triangles.push_back({vid(r, k), vid(r + 1, k + 1), vid(r, k + 1)});
      m.triangles.push_back({vid(r, k), vid(r + 1, k), vid(r + 1, k + 1)});
    }
  m.compute_normals();
  return m;
}

nlohmann::json phantom_spec_to_json(const PhantomSpec& s) {
  return {{"dims", {s.dims[0], s.dims[1], s.dims[2]}},
          {"spacing", {s.spacing[0], s.spacing[1], s.spacing[2]}},
          {"atrium_radius", s.atrium_radius},
          {"leaflet_thickness", s.leaflet_thickness},
          {"leaflet_coverage", s.leaflet_coverage},
          {"leaflet_sag", s.leaflet_sag},
          {"intensities", {s.blood_intensity, s.tissue_intensity}},
          {"noise_sigma", s.noise_sigma},
          {"rng_seed", s.rng_seed}};
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  PhantomSpec s;
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "phantom spec must be an object", "phantom");
  try {
    if (j.contains("dims")) {
      const auto& d = j.at("dims");
      if (d.is_number()) s.dims = {d.get<int>(), d.get<int>(), d.get<int>()};
      else s.dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    }
    if (j.contains("spacing")) {
      const auto& d = j.at("spacing");
      if (d.is_number()) s.spacing = Vec3::Constant(d.get<double>());
      else s.spacing = Vec3(d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>());
    }
    if (j.contains("atrium_radius")) s.atrium_radius = j.at("atrium_radius").get<double>();
    if (j.contains("leaflet_thickness")) s.leaflet_thickness = j.at("leaflet_thickness").get<double>();
    if (j.contains("leaflet_coverage")) s.leaflet_coverage = j.at("leaflet_coverage").get<double>();
    if (j.contains("leaflet_sag")) s.leaflet_sag = j.at("leaflet_sag").get<double>();
    if (j.contains("intensities")) {
      s.blood_intensity = j.at("intensities").at(0).get<double>();
      s.tissue_intensity = j.at("intensities").at(1).get<double>();
    }
    if (j.contains("noise_sigma")) s.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("rng_seed")) s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("phantom spec: ") + e.what(), "phantom");
  }
  return s;
}

}  // namespace mvseg
