// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/annulus.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "mvseg/error.hpp"

namespace mvseg {
namespace {

constexpr double kMinPointGap = 0.1;  // mm
constexpr int kDenseSamplesPerSegment = 256;

Mat3 covariance(const std::vector<Vec3>& pts, const Vec3& mean) {
  Mat3 c = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - mean;
    c += d * d.transpose();
  }
  return c / static_cast<double>(pts.size());
}

Vec3 mean_of(const std::vector<Vec3>& pts) {
  Vec3 m = Vec3::Zero();
  for (const auto& p : pts) m += p;
  return m / static_cast<double>(pts.size());
}

// Closed natural cubic spline in chord-length parameterization.
class PeriodicSpline {
 public:
  explicit PeriodicSpline(const std::vector<Vec3>& pts) : p_(pts) {
    const int n = static_cast<int>(pts.size());
    h_.resize(n);
    for (int i = 0; i < n; ++i) h_[i] = (p_[(i + 1) % n] - p_[i]).norm();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs(n, 3);
    for (int i = 0; i < n; ++i) {
      const int prev = (i + n - 1) % n;
      const int next = (i + 1) % n;
      a(i, prev) += h_[prev];
      a(i, i) += 2.0 * (h_[prev] + h_[i]);
      a(i, next) += h_[i];
      const Vec3 r = 6.0 * ((p_[next] - p_[i]) / h_[i] - (p_[i] - p_[prev]) / h_[prev]);
      rhs.row(i) = r.transpose();
    }
    const Eigen::MatrixXd m = a.partialPivLu().solve(rhs);
    m_.resize(n);
    for (int i = 0; i < n; ++i) m_[i] = m.row(i).transpose();
  }

  int segments() const { return static_cast<int>(p_.size()); }

  Vec3 eval(int seg, double u) const {
    const int n = segments();
    const int nx = (seg + 1) % n;
    const double h = h_[seg];
    const double w = h - u;
    return m_[seg] * (w * w * w) / (6.0 * h) + m_[nx] * (u * u * u) / (6.0 * h) +
           (p_[seg] / h - m_[seg] * h / 6.0) * w + (p_[nx] / h - m_[nx] * h / 6.0) * u;
  }

  double segment_length(int seg) const { return h_[seg]; }

 private:
  std::vector<Vec3> p_;
  std::vector<double> h_;
  std::vector<Vec3> m_;
};

Vec3 vec_from_json(const nlohmann::json& j, const char* what) {
  try {
    if (j.is_array() && j.size() == 3) return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    return Vec3(j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>());
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kParseError, std::string("expected {x,y,z} for ") + what, what);
  }
}

nlohmann::json vec_to_json(const Vec3& v) { return {{"x", v.x()}, {"y", v.y()}, {"z", v.z()}}; }

}  // namespace

Vec3 default_probe_dir(const Geometry& g) { return -g.orientation.col(2); }

AnnulusModel fit_annulus(const AnnulusDefinition& def) {
  const auto& pts = def.points;
  const std::size_t n = pts.size();
  if (n < 6)
    throw Error(ErrorCode::kInvalidArgument,
                "too few points: annulus needs at least 6, got " + std::to_string(n), "points");
  for (std::size_t i = 0; i < n; ++i) {
    if (!pts[i].allFinite())
      throw Error(ErrorCode::kInvalidArgument, "non-finite annulus point", "points");
    if ((pts[(i + 1) % n] - pts[i]).norm() < kMinPointGap)
      throw Error(ErrorCode::kInvalidArgument,
                  "consecutive annulus points closer than 0.1 mm at index " + std::to_string(i),
                  "points");
  }
  if (!def.probe_dir || !(def.probe_dir->norm() > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "probe_dir must be a nonzero vector", "probe_dir");
  const Vec3 probe = def.probe_dir->normalized();

  {
    const Eigen::SelfAdjointEigenSolver<Mat3> es(covariance(pts, mean_of(pts)));
    const Vec3 ev = es.eigenvalues();  // ascending
    if (!(ev[1] > 1e-12 * std::max(ev[2], 1e-300)))
      throw Error(ErrorCode::kInvalidArgument, "collinear annulus points: plane is degenerate",
                  "points");
  }

  const PeriodicSpline spline(pts);
  // Dense polyline for arc-length inversion.
  struct Knot {
    int seg;
    double u;
    double s;
  };
  std::vector<Knot> knots;
  knots.reserve(n * kDenseSamplesPerSegment + 1);
  double s = 0.0;
  Vec3 prev = spline.eval(0, 0.0);
  for (int seg = 0; seg < spline.segments(); ++seg) {
    const double h = spline.segment_length(seg);
    for (int q = 0; q < kDenseSamplesPerSegment; ++q) {
      const double u = h * q / kDenseSamplesPerSegment;
      const Vec3 p = spline.eval(seg, u);
      s += (p - prev).norm();
      knots.push_back({seg, u, s});
      prev = p;
    }
  }
  const Vec3 first = spline.eval(0, 0.0);
  s += (first - prev).norm();
  knots.push_back({spline.segments() - 1, spline.segment_length(spline.segments() - 1), s});
  const double total = s;

  AnnulusModel model;
  model.samples.reserve(AnnulusModel::kSampleCount);
  std::size_t cursor = 1;
  for (int k = 0; k < AnnulusModel::kSampleCount; ++k) {
    const double target = total * k / AnnulusModel::kSampleCount;
    if (k == 0) {
      model.samples.push_back(first);
      continue;
    }
    while (cursor + 1 < knots.size() && knots[cursor].s < target) ++cursor;
    const Knot& a = knots[cursor - 1];
    const Knot& b = knots[cursor];
    const double t = b.s > a.s ? (target - a.s) / (b.s - a.s) : 0.0;
    double u;
    int seg = a.seg;
    if (b.seg == a.seg) {
      u = a.u + t * (b.u - a.u);
    } else {
      // b starts a new segment at u = 0; a sits near the end of the previous one.
      u = a.u + t * (spline.segment_length(a.seg) - a.u);
    }
    model.samples.push_back(spline.eval(seg, u));
  }

  model.centroid = mean_of(model.samples);
  const Eigen::SelfAdjointEigenSolver<Mat3> es(covariance(model.samples, model.centroid));
  Vec3 normal = es.eigenvectors().col(0).normalized();
  const double align = normal.dot(probe);
  if (std::abs(align) < 1e-12)
    throw Error(ErrorCode::kInvalidArgument, "probe_dir lies in the annulus plane", "probe_dir");
  if (align < 0.0) normal = -normal;
  model.plane_normal = normal;
  model.plane_offset = normal.dot(model.centroid);
  model.probe_dir = probe;
  return model;
}

double signed_height(const Vec3& p, const AnnulusModel& model) {
  return model.plane_normal.dot(p) - model.plane_offset;
}

AnnulusDefinition annulus_from_json(const nlohmann::json& j) {
  AnnulusDefinition def;
  const nlohmann::json* arr = &j;
  if (j.is_object()) {
    if (!j.contains("points"))
      throw Error(ErrorCode::kParseError, "annulus JSON needs a 'points' array", "points");
    arr = &j.at("points");
    if (j.contains("probe_dir") && !j.at("probe_dir").is_null())
      def.probe_dir = vec_from_json(j.at("probe_dir"), "probe_dir");
  }
  if (!arr->is_array())
    throw Error(ErrorCode::kParseError, "annulus points must be an array", "points");
  for (const auto& p : *arr) def.points.push_back(vec_from_json(p, "points"));
  return def;
}

nlohmann::json annulus_to_json(const AnnulusDefinition& def) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : def.points) pts.push_back(vec_to_json(p));
  nlohmann::json j = {{"points", pts}};
  if (def.probe_dir) j["probe_dir"] = vec_to_json(*def.probe_dir);
  return j;
}

AnnulusDefinition load_annulus_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open annulus file " + path, "annulus");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("annulus JSON: ") + e.what(), "annulus");
  }
  return annulus_from_json(j);
}

nlohmann::json model_summary(const AnnulusModel& model) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& p : model.samples) samples.push_back({p.x(), p.y(), p.z()});
  return {{"centroid", vec_to_json(model.centroid)},
          {"plane_normal", vec_to_json(model.plane_normal)},
          {"plane_offset", model.plane_offset},
          {"probe_dir", vec_to_json(model.probe_dir)},
          {"samples", samples}};
}

}  // namespace mvseg
