// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/session.hpp"

#include <algorithm>
#include <cstdio>

#include "mvseg/archive.hpp"
#include "mvseg/error.hpp"
#include "mvseg/mesh_io.hpp"
#include "mvseg/nrrd.hpp"

namespace mvseg {
namespace {

constexpr int kMaxIterations = 1000000;
constexpr const char* kArchiveFormat = "mvseg-session";

constexpr SessionStage kStages[] = {
    SessionStage::kNew,           SessionStage::kVolumeLoaded,  SessionStage::kAnnulusSet,
    SessionStage::kBpActive,      SessionStage::kBpAccepted,    SessionStage::kLeafletActive,
    SessionStage::kLeafletAccepted, SessionStage::kSurfaceReady};

std::string snapshot_name(Stage stage, std::size_t n) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/%04zu.nrrd", stage == Stage::kBloodPool ? "bloodpool" : "leaflet", n);
  return buf;
}

nlohmann::json geometry_json(const Geometry& g) {
  nlohmann::json orient = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    orient.push_back({g.orientation(r, 0), g.orientation(r, 1), g.orientation(r, 2)});
  return {{"dims", {g.dims[0], g.dims[1], g.dims[2]}},
          {"spacing", {g.spacing[0], g.spacing[1], g.spacing[2]}},
          {"origin", {g.origin[0], g.origin[1], g.origin[2]}},
          {"orientation", orient}};
}

}  // namespace

const char* to_string(SessionStage stage) {
  switch (stage) {
    case SessionStage::kNew: return "NEW";
    case SessionStage::kVolumeLoaded: return "VOLUME_LOADED";
    case SessionStage::kAnnulusSet: return "ANNULUS_SET";
    case SessionStage::kBpActive: return "BP_ACTIVE";
    case SessionStage::kBpAccepted: return "BP_ACCEPTED";
    case SessionStage::kLeafletActive: return "LEAFLET_ACTIVE";
    case SessionStage::kLeafletAccepted: return "LEAFLET_ACCEPTED";
    case SessionStage::kSurfaceReady: return "SURFACE_READY";
  }
  return "?";
}

SessionStage parse_session_stage(std::string_view name) {
  for (SessionStage s : kStages)
    if (name == to_string(s)) return s;
  throw Error(ErrorCode::kParseError, "unknown session stage '" + std::string(name) + "'", "stage");
}

nlohmann::json to_json(const StepSummary& s) {
  return {{"stage", to_string(s.stage)},
          {"iterations_done", s.iterations_done},
          {"inside_volume_mm3", s.inside_volume_mm3},
          {"status", s.status},
          {"checksum", s.checksum},
          {"undo_depth", s.undo_depth}};
}

nlohmann::json to_json(const SurfaceSummary& s) {
  return {{"leaflet", {{"vertices", s.leaflet_vertices}, {"triangles", s.leaflet_triangles}}},
          {"bloodpool", {{"vertices", s.bloodpool_vertices}, {"triangles", s.bloodpool_triangles}}},
          {"proximal",
           {{"vertices", s.proximal_vertices},
            {"triangles", s.proximal_triangles},
            {"above_kept", s.above_kept},
            {"below_kept", s.below_kept}}}};
}

Artifact parse_artifact(std::string_view name) {
  if (name == "bp_mask") return Artifact::kBpMask;
  if (name == "leaflet_mask") return Artifact::kLeafletMask;
  if (name == "leaflet_mesh") return Artifact::kLeafletMesh;
  if (name == "proximal_mesh") return Artifact::kProximalMesh;
  if (name == "bp_phi") return Artifact::kBpPhi;
  if (name == "leaflet_phi") return Artifact::kLeafletPhi;
  throw Error(ErrorCode::kNotFound, "unknown artifact '" + std::string(name) + "'", "what");
}

const char* to_string(Artifact a) {
  switch (a) {
    case Artifact::kBpMask: return "bp_mask";
    case Artifact::kLeafletMask: return "leaflet_mask";
    case Artifact::kLeafletMesh: return "leaflet_mesh";
    case Artifact::kProximalMesh: return "proximal_mesh";
    case Artifact::kBpPhi: return "bp_phi";
    case Artifact::kLeafletPhi: return "leaflet_phi";
  }
  return "?";
}

Overlay parse_overlay(std::string_view list) {
  Overlay o;
  while (!list.empty()) {
    const auto comma = list.find(',');
    const std::string_view item = list.substr(0, comma);
    if (item == "cur" || item == "current") o.current = true;
    else if (item == "prev" || item == "previous") o.previous = true;
    else if (item == "annulus") o.annulus = true;
    else if (item != "none" && !item.empty())
      throw Error(ErrorCode::kInvalidArgument, "unknown overlay '" + std::string(item) + "'",
                  "overlay");
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  return o;
}

Session::Session(Volume3D volume, PipelineConfig config)
    : volume_(std::move(volume)), config_(std::move(config)) {
  volume_.geometry.validate();
  if (volume_.samples.size() != volume_.geometry.voxel_count())
    throw Error(ErrorCode::kInvalidArgument, "sample count does not match dims", "sizes");
  config_.validate();
  window_ = percentile_window(volume_);
}

void Session::require(bool ok, ErrorCode code, const std::string& message) const {
  if (!ok)
    throw Error(code, message + " (stage " + to_string(stage_) + ")", "stage");
}

const SpeedImage& Session::speed() {
  if (!speed_) speed_ = compute_speed(volume_, config_.sigma_mm, config_.beta);
  return *speed_;
}

AnnulusModel Session::set_annulus(const AnnulusDefinition& def) {
  require(stage_ == SessionStage::kVolumeLoaded || stage_ == SessionStage::kAnnulusSet ||
              stage_ == SessionStage::kBpActive,
          ErrorCode::kWrongStage, "annulus can only be set before the blood pool is accepted");
  AnnulusDefinition d = def;
  if (!d.probe_dir) d.probe_dir = default_probe_dir(volume_.geometry);
  AnnulusModel model = fit_annulus(d);
  annulus_def_ = std::move(d);
  annulus_ = model;
  bp_.clear();
  stage_ = SessionStage::kAnnulusSet;
  return model;
}

StepSummary Session::current_summary(Stage stage) const {
  const auto& s = snapshots(stage);
  StepSummary out;
  out.stage = stage;
  out.undo_depth = s.size();
  if (!s.empty()) {
    out.iterations_done = s.back().iterations_done;
    out.inside_volume_mm3 = inside_volume_mm3(s.back());
    out.checksum = phi_checksum(s.back());
  }
  return out;
}

StepSummary Session::step(Stage stage, int iterations, const std::optional<ContourParams>& params) {
  if (iterations < 1 || iterations > kMaxIterations)
    throw Error(ErrorCode::kInvalidArgument,
                "iterations must lie in [1, " + std::to_string(kMaxIterations) + "]", "iterations");
  if (stage == Stage::kBloodPool)
    require(stage_ == SessionStage::kAnnulusSet || stage_ == SessionStage::kBpActive,
            ErrorCode::kWrongStage, "blood-pool steps need ANNULUS_SET or BP_ACTIVE");
  else
    require(stage_ == SessionStage::kBpAccepted || stage_ == SessionStage::kLeafletActive,
            ErrorCode::kWrongStage, "leaflet steps need BP_ACCEPTED or LEAFLET_ACTIVE");
  const ContourParams p = params ? *params : config_.params(stage);
  p.validate();

  auto& s = stack(stage);
  LevelSetState start;
  if (!s.empty()) {
    start = s.back();
  } else if (stage == Stage::kBloodPool) {
    start = init_ball(volume_.geometry, annulus_->centroid, config_.seed_radius_mm);
  } else {
    start = init_shell(to_mask(bp_.back()), config_.shell_distance_mm, *annulus_, config_.shell);
  }
  try {
    s.push_back(advance(start, speed(), p, iterations));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kContourCollapsed) throw;
    StepSummary out = current_summary(stage);
    out.status = to_string(ErrorCode::kContourCollapsed);
    return out;
  }
  stage_ = stage == Stage::kBloodPool ? SessionStage::kBpActive : SessionStage::kLeafletActive;
  return current_summary(stage);
}

StepSummary Session::undo() {
  if (stage_ == SessionStage::kBpActive && !bp_.empty()) {
    bp_.pop_back();
    if (bp_.empty()) stage_ = SessionStage::kAnnulusSet;
    return current_summary(Stage::kBloodPool);
  }
  if (stage_ == SessionStage::kLeafletActive && !leaflet_.empty()) {
    leaflet_.pop_back();
    if (leaflet_.empty()) stage_ = SessionStage::kBpAccepted;
    return current_summary(Stage::kLeaflet);
  }
  throw Error(ErrorCode::kNothingToUndo,
              std::string("nothing to undo in stage ") + to_string(stage_), "stage");
}

SessionStage Session::accept(Stage stage) {
  if (stage == Stage::kBloodPool) {
    require(stage_ == SessionStage::kBpActive && !bp_.empty(), ErrorCode::kWrongStage,
            "accepting the blood pool needs BP_ACTIVE with a snapshot");
    stage_ = SessionStage::kBpAccepted;
  } else {
    require(stage_ == SessionStage::kLeafletActive && !leaflet_.empty(), ErrorCode::kWrongStage,
            "accepting the leaflet needs LEAFLET_ACTIVE with a snapshot");
    stage_ = SessionStage::kLeafletAccepted;
  }
  return stage_;
}

SurfaceSummary Session::extract_surface() {
  if (stage_ == SessionStage::kSurfaceReady && surface_) return *surface_;
  require(stage_ == SessionStage::kLeafletAccepted, ErrorCode::kWrongStage,
          "surface extraction needs LEAFLET_ACCEPTED");
  TriMesh leaf = marching_cubes(leaflet_.back());
  TriMesh bp = marching_cubes(bp_.back());
  ProximalOptions opts;
  opts.angle_threshold_deg = config_.proximal_angle_deg;
  opts.epsilon_mm = config_.proximal_epsilon_mm.value_or(0.25 * volume_.geometry.min_spacing());
  opts.any_kept = config_.proximal_any_kept;
  ProximalResult prox = extract_proximal(leaf, bp, *annulus_, opts);
  if (prox.empty())
    throw Error(ErrorCode::kEmptySurface, "proximal surface is empty: every vertex was rejected",
                "proximal");
  SurfaceSummary s;
  s.leaflet_vertices = leaf.vertices.size();
  s.leaflet_triangles = leaf.triangles.size();
  s.bloodpool_vertices = bp.vertices.size();
  s.bloodpool_triangles = bp.triangles.size();
  s.proximal_vertices = prox.mesh.vertices.size();
  s.proximal_triangles = prox.mesh.triangles.size();
  s.above_kept = prox.above_kept;
  s.below_kept = prox.below_kept;
  leaflet_mesh_ = std::move(leaf);
  bp_mesh_ = std::move(bp);
  proximal_mesh_ = std::move(prox.mesh);
  surface_ = s;
  stage_ = SessionStage::kSurfaceReady;
  return s;
}

const std::vector<LevelSetState>* Session::display_stack() const {
  if (!leaflet_.empty()) return &leaflet_;
  if (!bp_.empty()) return &bp_;
  return nullptr;
}

SliceImage Session::slice(SliceAxis axis, int index, const Overlay& overlay) const {
  SliceImage img = render_slice(volume_, axis, index, window_);
  if (!overlay.any()) return img;
  img = to_rgba(img);
  if (const auto* s = display_stack()) {
    if (overlay.previous && s->size() >= 2)
      draw_mask_contour(img, to_mask((*s)[s->size() - 2]), axis, index, kPreviousColor);
    if (overlay.current) draw_mask_contour(img, to_mask(s->back()), axis, index, kCurrentColor);
  }
  if (overlay.annulus && annulus_)
    draw_curve(img, volume_.geometry, annulus_->samples, axis, index, kAnnulusColor);
  return img;
}

std::string Session::export_artifact(Artifact what, std::string_view ext) const {
  auto missing = [&](const char* why) {
    return Error(ErrorCode::kNotFound, std::string(to_string(what)) + " is not available: " + why,
                 "what");
  };
  const bool nrrd = ext == "nrrd";
  switch (what) {
    case Artifact::kBpMask:
    case Artifact::kLeafletMask:
    case Artifact::kBpPhi:
    case Artifact::kLeafletPhi: {
      if (!nrrd) throw missing("volumes export as .nrrd");
      const bool bp = what == Artifact::kBpMask || what == Artifact::kBpPhi;
      const auto& s = bp ? bp_ : leaflet_;
      if (s.empty()) throw missing("the stage has no snapshot");
      if (what == Artifact::kBpMask || what == Artifact::kLeafletMask)
        return write_mask_nrrd(to_mask(s.back()));
      return write_nrrd(phi_volume(s.back()));
    }
    case Artifact::kLeafletMesh:
    case Artifact::kProximalMesh: {
      if (ext != "stl" && ext != "ply") throw missing("meshes export as .stl or .ply");
      if (!surface_) throw missing("the surface has not been extracted");
      const TriMesh& m = what == Artifact::kLeafletMesh ? leaflet_mesh_ : proximal_mesh_;
      return write_mesh(m, parse_mesh_format(ext));
    }
  }
  throw missing("unknown artifact");
}

nlohmann::json Session::summary() const {
  nlohmann::json j;
  j["stage"] = to_string(stage_);
  j["geometry"] = geometry_json(volume_.geometry);
  j["window"] = {{"low", window_.low}, {"high", window_.high}};
  j["annulus"] = annulus_ ? model_summary(*annulus_) : nlohmann::json(nullptr);
  if (annulus_def_) j["annulus_definition"] = annulus_to_json(*annulus_def_);
  j["bloodpool"] = to_json(current_summary(Stage::kBloodPool));
  j["leaflet"] = to_json(current_summary(Stage::kLeaflet));
  j["surface"] = surface_ ? to_json(*surface_) : nlohmann::json(nullptr);
  j["beta"] = speed_ ? nlohmann::json(speed_->beta) : nlohmann::json(nullptr);
  j["config"] = config_to_json(config_);
  return j;
}

std::string Session::save() const {
  std::vector<ArchiveEntry> entries;
  nlohmann::json m;
  m["format"] = kArchiveFormat;
  m["version"] = 1;
  m["stage"] = to_string(stage_);
  m["config"] = config_to_json(config_);
  if (annulus_def_) m["annulus"] = annulus_to_json(*annulus_def_);
  entries.push_back({"volume.nrrd", write_nrrd(volume_)});
  for (Stage stage : {Stage::kBloodPool, Stage::kLeaflet}) {
    nlohmann::json list = nlohmann::json::array();
    const auto& s = snapshots(stage);
    for (std::size_t n = 0; n < s.size(); ++n) {
      const std::string name = snapshot_name(stage, n);
      list.push_back({{"file", name},
                      {"iterations_done", s[n].iterations_done},
                      {"band_width", s[n].band_width},
                      {"elapsed_time", s[n].elapsed_time},
                      {"needs_reinit", s[n].needs_reinit}});
      entries.push_back({name, write_nrrd(phi_volume(s[n]))});
    }
    m[stage == Stage::kBloodPool ? "bloodpool" : "leaflet"] = list;
  }
  entries.insert(entries.begin(), {"manifest.json", m.dump(2)});
  return write_zip(entries);
}

Session Session::load(std::string_view zip) {
  const auto entries = read_zip(zip);
  auto find = [&](const std::string& name) -> const std::string& {
    for (const auto& e : entries)
      if (e.name == name) return e.data;
    throw Error(ErrorCode::kParseError, "session archive lacks " + name, name);
  };
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(find("manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("manifest.json: ") + e.what(), "manifest");
  }
  if (m.value("format", "") != kArchiveFormat)
    throw Error(ErrorCode::kParseError, "not a session archive", "format");

  Session s(read_nrrd(find("volume.nrrd")), config_from_json(m.at("config")));
  if (m.contains("annulus")) {
    s.annulus_def_ = annulus_from_json(m.at("annulus"));
    s.annulus_ = fit_annulus(*s.annulus_def_);
  }
  try {
    for (Stage stage : {Stage::kBloodPool, Stage::kLeaflet}) {
      const char* key = stage == Stage::kBloodPool ? "bloodpool" : "leaflet";
      for (const auto& item : m.value(key, nlohmann::json::array())) {
        const Volume3D phi = read_nrrd(find(item.at("file").get<std::string>()));
        if (!same_geometry(phi.geometry, s.volume_.geometry))
          throw Error(ErrorCode::kGeometryMismatch, "snapshot geometry differs from the volume",
                      item.at("file").get<std::string>());
        LevelSetState st;
        st.geometry = s.volume_.geometry;
        st.phi = phi.samples;
        st.iterations_done = item.at("iterations_done").get<long>();
        st.band_width = item.at("band_width").get<double>();
        st.elapsed_time = item.value("elapsed_time", 0.0);
        st.needs_reinit = item.value("needs_reinit", false);
        s.stack(stage).push_back(std::move(st));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("manifest.json: ") + e.what(), "manifest");
  }
  const SessionStage target = parse_session_stage(m.at("stage").get<std::string>());
  s.stage_ = target == SessionStage::kSurfaceReady ? SessionStage::kLeafletAccepted : target;
  if (target == SessionStage::kSurfaceReady) s.extract_surface();
  return s;
}

}  // namespace mvseg
