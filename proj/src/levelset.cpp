// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <limits>
#include <queue>

#include "mvseg/distance.hpp"
#include "mvseg/error.hpp"
#include "mvseg/parallel.hpp"

namespace mvseg {
namespace {

constexpr double kDefaultBandCells = 10.0;
constexpr std::size_t kChunk = 4096;
constexpr int kMaxSubsteps = 4096;
constexpr double kNearCells = 4.0;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Neighborhood {
  const float* phi;
  int nx, ny, nz;
  std::size_t sy, sz;

  float at(int i, int j, int k) const {
    i = std::clamp(i, 0, nx - 1);
    j = std::clamp(j, 0, ny - 1);
    k = std::clamp(k, 0, nz - 1);
    return phi[static_cast<std::size_t>(i) + sy * j + sz * k];
  }
};

struct SpeedGradient {
  std::vector<float> gx, gy, gz;
};

SpeedGradient speed_gradient(const Volume3D& s) {
  const Geometry& g = s.geometry;
  SpeedGradient out;
  out.gx.resize(s.samples.size());
  out.gy.resize(s.samples.size());
  out.gz.resize(s.samples.size());
  auto diff = [](float lo, float hi, int idx, int n, double h) {
    (void)idx;
    (void)n;
    return static_cast<float>((static_cast<double>(hi) - lo) / h);
  };
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t c = g.linear(i, j, k);
        auto axis = [&](int idx, int n, int di, int dj, int dk, double h) {
          if (n < 2) return 0.0f;
          const int lo = std::max(idx - 1, 0), hi = std::min(idx + 1, n - 1);
          const float flo = s.at(i + (lo - idx) * di, j + (lo - idx) * dj, k + (lo - idx) * dk);
          const float fhi = s.at(i + (hi - idx) * di, j + (hi - idx) * dj, k + (hi - idx) * dk);
          return diff(flo, fhi, idx, n, h * (hi - lo));
        };
        out.gx[c] = axis(i, g.dims[0], 1, 0, 0, g.spacing[0]);
        out.gy[c] = axis(j, g.dims[1], 0, 1, 0, g.spacing[1]);
        out.gz[c] = axis(k, g.dims[2], 0, 0, 1, g.spacing[2]);
      }
  return out;
}

// Propagation and advection; first-order upwind.
double hyperbolic_rate(const Neighborhood& nb, int i, int j, int k, double s, const Vec3& grad_s,
                       const ContourParams& p, const Vec3& h) {
  const double c = nb.at(i, j, k);
  const double dxm = (c - nb.at(i - 1, j, k)) / h[0], dxp = (nb.at(i + 1, j, k) - c) / h[0];
  const double dym = (c - nb.at(i, j - 1, k)) / h[1], dyp = (nb.at(i, j + 1, k) - c) / h[1];
  const double dzm = (c - nb.at(i, j, k - 1)) / h[2], dzp = (nb.at(i, j, k + 1) - c) / h[2];

  double rate = 0.0;
  if (p.propagation_scale != 0.0) {
    const double f = p.propagation_scale * s;
    auto sq = [](double v) { return v * v; };
    double g2;
    if (f > 0.0) {
      g2 = sq(std::max(dxm, 0.0)) + sq(std::min(dxp, 0.0)) + sq(std::max(dym, 0.0)) +
           sq(std::min(dyp, 0.0)) + sq(std::max(dzm, 0.0)) + sq(std::min(dzp, 0.0));
    } else {
      g2 = sq(std::min(dxm, 0.0)) + sq(std::max(dxp, 0.0)) + sq(std::min(dym, 0.0)) +
           sq(std::max(dyp, 0.0)) + sq(std::min(dzm, 0.0)) + sq(std::max(dzp, 0.0));
    }
    rate -= f * std::sqrt(g2);
  }
  if (p.advection_scale != 0.0) {
    // Transport with velocity v = -a_a grad s (down the speed valley).
    const double vx = -p.advection_scale * grad_s[0];
    const double vy = -p.advection_scale * grad_s[1];
    const double vz = -p.advection_scale * grad_s[2];
    rate -= vx * (vx > 0.0 ? dxm : dxp) + vy * (vy > 0.0 ? dym : dyp) + vz * (vz > 0.0 ? dzm : dzp);
  }
  return rate;
}

// a_c s kappa |grad phi| with central differences.
double curvature_rate(const Neighborhood& nb, int i, int j, int k, double s,
                      const ContourParams& p, const Vec3& h) {
  if (p.curvature_scale == 0.0) return 0.0;
  const double c = nb.at(i, j, k);
  const double xm = nb.at(i - 1, j, k), xp = nb.at(i + 1, j, k);
  const double ym = nb.at(i, j - 1, k), yp = nb.at(i, j + 1, k);
  const double zm = nb.at(i, j, k - 1), zp = nb.at(i, j, k + 1);
  const double px = (xp - xm) / (2.0 * h[0]);
  const double py = (yp - ym) / (2.0 * h[1]);
  const double pz = (zp - zm) / (2.0 * h[2]);
  const double gx2 = px * px, gy2 = py * py, gz2 = pz * pz;
  const double g2 = gx2 + gy2 + gz2;
  if (g2 <= 1e-12) return 0.0;
  const double pxx = (xp - 2.0 * c + xm) / (h[0] * h[0]);
  const double pyy = (yp - 2.0 * c + ym) / (h[1] * h[1]);
  const double pzz = (zp - 2.0 * c + zm) / (h[2] * h[2]);
  const double pxy = (nb.at(i + 1, j + 1, k) - nb.at(i + 1, j - 1, k) - nb.at(i - 1, j + 1, k) +
                      nb.at(i - 1, j - 1, k)) /
                     (4.0 * h[0] * h[1]);
  const double pxz = (nb.at(i + 1, j, k + 1) - nb.at(i + 1, j, k - 1) - nb.at(i - 1, j, k + 1) +
                      nb.at(i - 1, j, k - 1)) /
                     (4.0 * h[0] * h[2]);
  const double pyz = (nb.at(i, j + 1, k + 1) - nb.at(i, j + 1, k - 1) - nb.at(i, j - 1, k + 1) +
                      nb.at(i, j - 1, k - 1)) /
                     (4.0 * h[1] * h[2]);
  const double num = pxx * (gy2 + gz2) + pyy * (gx2 + gz2) + pzz * (gx2 + gy2) -
                     2.0 * (px * py * pxy + px * pz * pxz + py * pz * pyz);
  return p.curvature_scale * s * num / g2;
}

struct Extremes {
  double rate = 0.0;   // max |a_p s| + |a_a grad s| over the band
  double denom = 0.0;  // rate + 6 a_c s / h
  double speed = 0.0;  // max s
  double front_rate = 0.0;  // rate and speed over voxels next to a sign change
  double front_speed = 0.0;
};

bool on_front(const Neighborhood& nb, int i, int j, int k) {
  const bool neg = nb.at(i, j, k) < 0.0f;
  return (nb.at(i - 1, j, k) < 0.0f) != neg || (nb.at(i + 1, j, k) < 0.0f) != neg ||
         (nb.at(i, j - 1, k) < 0.0f) != neg || (nb.at(i, j + 1, k) < 0.0f) != neg ||
         (nb.at(i, j, k - 1) < 0.0f) != neg || (nb.at(i, j, k + 1) < 0.0f) != neg;
}

// Replaces phi with the clamped signed distance to its zero level set.
// Returns false when there is no interface.
bool reinit_field(const Geometry& g, std::vector<float>& phi, double limit) {
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  const std::size_t n = phi.size();
  const Vec3 h = g.spacing;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> dist(n, kInf);
  std::vector<Vec3> cp(n);
  std::vector<Vec3> normal(n, Vec3::Zero());  // unit surface normal at cp, zero if unknown
  using Entry = std::pair<double, std::uint32_t>;
  std::vector<Entry> seeds;

  auto inside = [&](std::size_t idx) { return phi[idx] < 0.0f; };
  const std::size_t sy = nx, sz = static_cast<std::size_t>(nx) * ny;

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t c = g.linear(i, j, k);
        const bool in_c = inside(c);
        const int coord[3] = {i, j, k};
        const std::size_t stride[3] = {1, sy, sz};
        double inv2 = 0.0;
        Vec3 dir = Vec3::Zero();
        bool any = false, zero = false;
        for (int a = 0; a < 3; ++a) {
          double best = kInf;
          int best_sign = 0;
          for (int sgn : {-1, 1}) {
            const int q = coord[a] + sgn;
            if (q < 0 || q >= g.dims[a]) continue;
            const std::size_t m = sgn < 0 ? c - stride[a] : c + stride[a];
            if (inside(m) == in_c) continue;
            const double a0 = std::abs(static_cast<double>(phi[c]));
            const double a1 = std::abs(static_cast<double>(phi[m]));
            const double theta = a0 + a1 > 0.0 ? a0 / (a0 + a1) : 0.5;
            const double d = theta * h[a];
            if (d < best) {
              best = d;
              best_sign = sgn;
            }
          }
          if (best_sign != 0) {
            any = true;
            if (best <= 0.0) {
              zero = true;
            } else {
              inv2 += 1.0 / (best * best);
              dir[a] = best_sign / best;
            }
          }
        }
        if (!any) continue;
        const Vec3 x(i * h[0], j * h[1], k * h[2]);
        if (zero) {
          dist[c] = 0.0;
          cp[c] = x;
        } else {
          double d = 1.0 / std::sqrt(inv2);
          // Central-difference gradient, one-sided at faces.
          Vec3 grad;
          for (int a = 0; a < 3; ++a) {
            const int lo = std::max(coord[a] - 1, 0), hi = std::min(coord[a] + 1, g.dims[a] - 1);
            const std::size_t mlo = c - (coord[a] - lo) * stride[a];
            const std::size_t mhi = c + (hi - coord[a]) * stride[a];
            grad[a] = hi > lo ? (static_cast<double>(phi[mhi]) - phi[mlo]) / ((hi - lo) * h[a]) : 0.0;
          }
          Vec3 nrm = dir.normalized();
          if (grad.squaredNorm() > 0.0) {
            const Vec3 toward = (in_c ? 1.0 : -1.0) * grad.normalized();
            if (toward.dot(nrm) > 0.0) {
              nrm = toward;
              d = std::min(d, std::abs(static_cast<double>(phi[c])) / grad.norm());
            }
          }
          dist[c] = d;
          normal[c] = nrm;
          cp[c] = x + d * nrm;
        }
        seeds.emplace_back(dist[c], static_cast<std::uint32_t>(c));
      }

  if (seeds.empty()) return false;

  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap(std::greater<Entry>(),
                                                                           std::move(seeds));
  while (!heap.empty()) {
    const auto [d, c] = heap.top();
    heap.pop();
    if (d > dist[c]) continue;
    const Index3 ijk = g.unravel(c);
    const Vec3 target = cp[c];
    for (int dk = -1; dk <= 1; ++dk) {
      const int k = ijk[2] + dk;
      if (k < 0 || k >= nz) continue;
      for (int dj = -1; dj <= 1; ++dj) {
        const int j = ijk[1] + dj;
        if (j < 0 || j >= ny) continue;
        for (int di = -1; di <= 1; ++di) {
          const int i = ijk[0] + di;
          if (i < 0 || i >= nx || (di == 0 && dj == 0 && dk == 0)) continue;
          const std::size_t m = g.linear(i, j, k);
          const Vec3 x(i * h[0], j * h[1], k * h[2]);
          const double cand = (x - target).norm();
          if (cand < dist[m] && cand < limit) {
            dist[m] = cand;
            cp[m] = target;
            normal[m] = normal[c];
            heap.emplace(cand, static_cast<std::uint32_t>(m));
          }
        }
      }
    }
  }

  // Distance to the tangent plane at the closest point, kept within half a
  // cell below the point distance.
  const double slack = 0.5 * g.min_spacing();
  for (std::size_t c = 0; c < n; ++c) {
    double d = dist[c];
    if (std::isfinite(d) && d > 0.0 && normal[c].squaredNorm() > 0.0) {
      const Index3 ijk = g.unravel(c);
      const Vec3 x(ijk[0] * h[0], ijk[1] * h[1], ijk[2] * h[2]);
      d = std::clamp(std::abs(normal[c].dot(x - cp[c])), std::max(d - slack, 0.0), d);
    }
    d = std::min(d, limit);
    phi[c] = static_cast<float>(phi[c] < 0.0f ? -d : d);
  }
  return true;
}

}  // namespace

Stage parse_stage(std::string_view tag) {
  const std::string t = lower(tag);
  if (t == "bloodpool" || t == "blood_pool" || t == "bp") return Stage::kBloodPool;
  if (t == "leaflet") return Stage::kLeaflet;
  throw Error(ErrorCode::kInvalidArgument, "unknown stage '" + std::string(tag) + "'", "stage");
}

const char* to_string(Stage stage) {
  return stage == Stage::kBloodPool ? "BLOODPOOL" : "LEAFLET";
}

const char* to_string(TimeStepPolicy policy) {
  return policy == TimeStepPolicy::kWorstCase ? "worst_case" : "adaptive";
}

TimeStepPolicy parse_time_step_policy(std::string_view name) {
  const std::string t = lower(name);
  if (t == "worst_case") return TimeStepPolicy::kWorstCase;
  if (t == "adaptive") return TimeStepPolicy::kAdaptive;
  throw Error(ErrorCode::kInvalidArgument, "unknown time step policy '" + std::string(name) + "'",
              "time_step");
}

void ContourParams::validate() const {
  if (!(dt_safety > 0.0 && dt_safety < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "dt_safety must lie in (0, 1)", "dt_safety");
  if (reinit_interval < 1)
    throw Error(ErrorCode::kInvalidArgument, "reinit_interval must be >= 1", "reinit_interval");
  if (!std::isfinite(curvature_scale) || !std::isfinite(advection_scale) ||
      !std::isfinite(propagation_scale))
    throw Error(ErrorCode::kInvalidArgument, "contour scales must be finite", "params");
}

ContourParams default_params(Stage stage) {
  ContourParams p;
  if (stage == Stage::kBloodPool) {
    p.curvature_scale = 1.2;
    p.advection_scale = 1.0;
    p.propagation_scale = 0.9;
  } else {
    p.curvature_scale = 0.9;
    p.advection_scale = 0.1;
    p.propagation_scale = -0.4;
  }
  return p;
}

ContourParams default_params(std::string_view stage_tag) {
  return default_params(parse_stage(stage_tag));
}

LevelSetState init_ball(const Geometry& geometry, const Vec3& center_world, double radius_mm) {
  geometry.validate();
  const Vec3 ci = geometry.world_to_index(center_world);
  for (int a = 0; a < 3; ++a)
    if (!(ci[a] >= 0.0 && ci[a] <= geometry.dims[a] - 1))
      throw Error(ErrorCode::kOutOfBounds, "seed center lies outside the volume", "center");
  if (!(radius_mm > geometry.spacing.maxCoeff()))
    throw Error(ErrorCode::kInvalidArgument, "seed radius must exceed the largest spacing",
                "radius");
  LevelSetState st;
  st.geometry = geometry;
  st.band_width = kDefaultBandCells * geometry.min_spacing();
  st.phi.resize(geometry.voxel_count());
  for (int k = 0; k < geometry.dims[2]; ++k)
    for (int j = 0; j < geometry.dims[1]; ++j)
      for (int i = 0; i < geometry.dims[0]; ++i) {
        const Vec3 x = geometry.index_to_world(Vec3(i, j, k));
        st.phi[geometry.linear(i, j, k)] = static_cast<float>((x - center_world).norm() - radius_mm);
      }
  return st;
}

LevelSetState init_shell(const LabelMask& bloodpool, double distance_mm,
                         const AnnulusModel& annulus, const ShellOptions& options) {
  const Geometry& g = bloodpool.geometry;
  const std::size_t n = g.voxel_count();
  const std::size_t bp_count = bloodpool.count();
  if (bp_count == 0)
    throw Error(ErrorCode::kEmptyRegion, "blood-pool mask is empty", "bloodpool");
  if (bp_count == n)
    throw Error(ErrorCode::kEmptyRegion, "blood-pool mask covers the whole volume", "bloodpool");
  if (!(distance_mm > 0.0))
    throw Error(ErrorCode::kEmptyRegion, "empty shell: distance must be positive", "distance");

  const double limit2 = distance_mm * distance_mm * (1.0 + 1e-12);
  std::vector<std::uint8_t> region(n, 0);
  if (options.side != ShellSide::kInward) {
    const auto d2 = squared_distance_transform(g, bloodpool.samples);
    for (std::size_t i = 0; i < n; ++i)
      if (!bloodpool.samples[i] && d2[i] <= limit2) region[i] = 1;
  }
  if (options.side != ShellSide::kOutward) {
    std::vector<std::uint8_t> outside(n);
    for (std::size_t i = 0; i < n; ++i) outside[i] = bloodpool.samples[i] ? 0 : 1;
    const auto d2 = squared_distance_transform(g, outside);
    for (std::size_t i = 0; i < n; ++i)
      if (bloodpool.samples[i] && d2[i] <= limit2) region[i] = 1;
  }

  if (options.roi_clamp) {
    double rmax = 0.0;
    for (const auto& p : annulus.samples) {
      const Vec3 d = p - annulus.centroid;
      rmax = std::max(rmax, (d - d.dot(annulus.plane_normal) * annulus.plane_normal).norm());
    }
    const double r = rmax + options.roi_margin_mm;
    for (std::size_t i = 0; i < n; ++i) {
      if (!region[i]) continue;
      const Index3 ijk = g.unravel(i);
      const Vec3 d = g.index_to_world(Vec3(ijk[0], ijk[1], ijk[2])) - annulus.centroid;
      if ((d - d.dot(annulus.plane_normal) * annulus.plane_normal).norm() > r) region[i] = 0;
    }
  }

  std::size_t count = 0;
  for (auto v : region) count += v;
  if (count == 0) throw Error(ErrorCode::kEmptyRegion, "empty shell", "distance");
  if (count == n) throw Error(ErrorCode::kEmptyRegion, "shell covers the whole volume", "distance");

  std::vector<std::uint8_t> complement(n);
  for (std::size_t i = 0; i < n; ++i) complement[i] = region[i] ? 0 : 1;
  const auto to_region = squared_distance_transform(g, region);
  const auto to_outside = squared_distance_transform(g, complement);
  const double half = 0.5 * g.min_spacing();

  LevelSetState st;
  st.geometry = g;
  st.band_width = kDefaultBandCells * g.min_spacing();
  st.phi.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    st.phi[i] = static_cast<float>(region[i] ? -(std::sqrt(to_outside[i]) - half)
                                             : std::sqrt(to_region[i]) - half);
  return st;
}

LevelSetState advance(const LevelSetState& state, const SpeedImage& speed,
                      const ContourParams& params, int n_iters) {
  params.validate();
  if (n_iters < 1)
    throw Error(ErrorCode::kInvalidArgument, "iteration count must be >= 1", "iterations");
  if (!same_geometry(state.geometry, speed.image.geometry))
    throw Error(ErrorCode::kGeometryMismatch, "speed image geometry differs from level set",
                "speed");

  const Geometry& g = state.geometry;
  const Vec3 h = g.spacing;
  const double hmin = g.min_spacing();
  LevelSetState out = state;
  out.band_width = std::max(state.band_width, (params.dt_safety * params.reinit_interval + 2.0) * hmin);
  const double band = out.band_width;
  const double clamp_limit = band + 2.0 * hmin;

  SpeedGradient sg;
  if (params.advection_scale != 0.0) sg = speed_gradient(speed.image);

  const std::vector<float>& s = speed.image.samples;
  std::vector<std::uint32_t> active;
  active.reserve(out.phi.size() / 4);

  auto count_inside = [&] {
    std::size_t inside = 0;
    for (float v : out.phi) inside += v < 0.0f;
    return inside;
  };

  const Neighborhood nb{out.phi.data(), g.dims[0], g.dims[1], g.dims[2],
                        static_cast<std::size_t>(g.dims[0]),
                        static_cast<std::size_t>(g.dims[0]) * g.dims[1]};
  const double cap = params.dt_safety * hmin;
  std::vector<double> hyper, curv, coef;
  std::vector<std::uint8_t> front;
  std::vector<std::size_t> near;
  std::vector<float> start;

  for (int it = 0; it < n_iters; ++it) {
    active.clear();
    std::size_t inside = 0;
    for (std::size_t c = 0; c < out.phi.size(); ++c) {
      const float v = out.phi[c];
      inside += v < 0.0f;
      if (std::abs(v) < band) active.push_back(static_cast<std::uint32_t>(c));
    }
    if (inside == 0)
      throw Error(ErrorCode::kContourCollapsed, "contour collapsed: no inside voxels remain");

    hyper.resize(active.size());
    curv.resize(active.size());
    coef.resize(active.size());
    front.resize(active.size());
    const std::size_t chunks = chunk_count(active.size(), kChunk);
    std::vector<Extremes> ext(chunks);
    parallel_chunks(active.size(), kChunk, [&](std::size_t b, std::size_t e, std::size_t ci) {
      Extremes x;
      for (std::size_t q = b; q < e; ++q) {
        const std::size_t c = active[q];
        const Index3 ijk = g.unravel(c);
        const Vec3 gs = sg.gx.empty() ? Vec3::Zero() : Vec3(sg.gx[c], sg.gy[c], sg.gz[c]);
        hyper[q] = hyperbolic_rate(nb, ijk[0], ijk[1], ijk[2], s[c], gs, params, h);
        curv[q] = curvature_rate(nb, ijk[0], ijk[1], ijk[2], s[c], params, h);
        coef[q] = std::abs(params.propagation_scale * s[c]) +
                  std::abs(params.advection_scale) * gs.norm();
        front[q] = on_front(nb, ijk[0], ijk[1], ijk[2]);
        x.rate = std::max(x.rate, coef[q]);
        x.denom = std::max(x.denom, coef[q] + 6.0 * std::abs(params.curvature_scale) * s[c] / hmin);
        x.speed = std::max(x.speed, static_cast<double>(s[c]));
        if (front[q]) {
          x.front_rate = std::max(x.front_rate, coef[q] + std::abs(curv[q]));
          x.front_speed = std::max(x.front_speed, static_cast<double>(s[c]));
        }
      }
      ext[ci] = x;
    });
    Extremes all;
    for (const auto& x : ext) {
      all.rate = std::max(all.rate, x.rate);
      all.denom = std::max(all.denom, x.denom);
      all.speed = std::max(all.speed, x.speed);
      all.front_rate = std::max(all.front_rate, x.front_rate);
      all.front_speed = std::max(all.front_speed, x.front_speed);
    }

    const bool worst = params.time_step == TimeStepPolicy::kWorstCase;
    const double a_c = std::abs(params.curvature_scale);
    auto diffusion_limit = [&](double speed_value) {
      return a_c > 0.0 && speed_value > 0.0 ? hmin * hmin / (6.0 * a_c * speed_value)
                                            : std::numeric_limits<double>::infinity();
    };
    double dt = 0.0;
    int substeps = 1;
    if (worst) {
      if (all.denom > 0.0) dt = params.dt_safety * hmin / all.denom;
    } else {
      const double rate = all.front_rate > 0.0 ? all.front_rate : all.rate;
      const double speed_ref = all.front_speed > 0.0 ? all.front_speed : all.speed;
      const double dt_curv = diffusion_limit(speed_ref);
      if (rate > 0.0) {
        dt = params.dt_safety * hmin / rate;
        if (std::isfinite(dt_curv))
          substeps = static_cast<int>(std::clamp(std::ceil(dt / dt_curv - 1e-9), 1.0,
                                                 static_cast<double>(kMaxSubsteps)));
      } else if (std::isfinite(dt_curv)) {
        dt = dt_curv;
      }
    }

    if (dt > 0.0) {
      // Per-voxel hyperbolic time and curvature sub-step. Off-front voxels
      // are held to their own stability limits.
      parallel_chunks(active.size(), kChunk, [&](std::size_t b, std::size_t e, std::size_t) {
        for (std::size_t q = b; q < e; ++q) {
          double tau = dt;
          double sub = dt / substeps;
          if (!worst) {
            if (coef[q] > 0.0) tau = std::min(dt, params.dt_safety * hmin / coef[q]);
            sub = std::min(tau / substeps, diffusion_limit(s[active[q]]));
          }
          hyper[q] = std::clamp(tau * hyper[q] + sub * curv[q], -cap, cap);
          coef[q] = sub;
        }
      });
      for (std::size_t q = 0; q < active.size(); ++q)
        out.phi[active[q]] = static_cast<float>(out.phi[active[q]] + hyper[q]);
      // Later curvature sub-steps only touch voxels near the zero level set.
      near.clear();
      start.clear();
      if (substeps > 1)
        for (std::size_t q = 0; q < active.size(); ++q)
          if (std::abs(out.phi[active[q]]) < kNearCells * hmin) {
            near.push_back(q);
            start.push_back(out.phi[active[q]] - static_cast<float>(hyper[q]));
          }
      for (int r = 1; r < substeps; ++r) {
        parallel_chunks(near.size(), kChunk, [&](std::size_t b, std::size_t e, std::size_t) {
          for (std::size_t n = b; n < e; ++n) {
            const std::size_t q = near[n];
            const std::size_t c = active[q];
            const Index3 ijk = g.unravel(c);
            curv[q] = std::clamp(
                coef[q] * curvature_rate(nb, ijk[0], ijk[1], ijk[2], s[c], params, h), -cap, cap);
          }
        });
        for (std::size_t q : near)
          out.phi[active[q]] = static_cast<float>(out.phi[active[q]] + curv[q]);
      }
      // No voxel moves more than one cell per iteration.
      for (std::size_t n = 0; n < near.size(); ++n) {
        float& v = out.phi[active[near[n]]];
        v = std::clamp(v, start[n] - static_cast<float>(hmin), start[n] + static_cast<float>(hmin));
      }
      out.elapsed_time += dt;
      out.needs_reinit = true;
    }
    ++out.iterations_done;
    if (out.iterations_done % params.reinit_interval == 0 && out.needs_reinit) {
      if (count_inside() == 0)
        throw Error(ErrorCode::kContourCollapsed, "contour collapsed: no inside voxels remain");
      reinit_field(g, out.phi, clamp_limit);
      out.needs_reinit = false;
    }
  }
  if (count_inside() == 0)
    throw Error(ErrorCode::kContourCollapsed, "contour collapsed: no inside voxels remain");
  return out;
}

LevelSetState reinitialize(const LevelSetState& state) {
  std::size_t inside = 0;
  for (float v : state.phi) inside += v < 0.0f;
  if (inside == 0)
    throw Error(ErrorCode::kEmptyRegion, "cannot reinitialize: inside region is empty", "phi");
  if (inside == state.phi.size())
    throw Error(ErrorCode::kEmptyRegion, "cannot reinitialize: region fills the volume", "phi");
  LevelSetState out = state;
  const double hmin = state.geometry.min_spacing();
  if (out.band_width <= 0.0) out.band_width = kDefaultBandCells * hmin;
  reinit_field(out.geometry, out.phi, out.band_width + 2.0 * hmin);
  out.needs_reinit = false;
  return out;
}

LabelMask to_mask(const LevelSetState& state) {
  std::vector<std::uint8_t> m(state.phi.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = state.phi[i] < 0.0f ? 1 : 0;
  return LabelMask(state.geometry, std::move(m));
}

double inside_volume_mm3(const LevelSetState& state) {
  std::size_t inside = 0;
  for (float v : state.phi) inside += v < 0.0f;
  return static_cast<double>(inside) * state.geometry.voxel_volume();
}

Volume3D phi_volume(const LevelSetState& state) { return Volume3D(state.geometry, state.phi); }

std::string bytes_checksum(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string phi_checksum(const LevelSetState& state) {
  return bytes_checksum(std::string_view(reinterpret_cast<const char*>(state.phi.data()),
                                         state.phi.size() * sizeof(float)));
}

}  // namespace mvseg
