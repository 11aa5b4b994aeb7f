// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvseg/annulus.hpp"
#include "mvseg/error.hpp"
#include "mvseg/filters.hpp"
#include "mvseg/levelset.hpp"
#include "mvseg/mesh.hpp"
#include "mvseg/pipeline.hpp"
#include "mvseg/slice.hpp"
#include "mvseg/surface.hpp"
#include "mvseg/volume.hpp"

namespace mvseg {

enum class SessionStage {
  kNew,
  kVolumeLoaded,
  kAnnulusSet,
  kBpActive,
  kBpAccepted,
  kLeafletActive,
  kLeafletAccepted,
  kSurfaceReady,
};

const char* to_string(SessionStage stage);
SessionStage parse_session_stage(std::string_view name);

struct StepSummary {
  Stage stage = Stage::kBloodPool;
  long iterations_done = 0;
  double inside_volume_mm3 = 0.0;
  std::string status = "OK";  // or CONTOUR_COLLAPSED
  std::string checksum;       // of the current phi, empty without a snapshot
  std::size_t undo_depth = 0;
};
nlohmann::json to_json(const StepSummary& s);

struct SurfaceSummary {
  std::size_t leaflet_vertices = 0, leaflet_triangles = 0;
  std::size_t bloodpool_vertices = 0, bloodpool_triangles = 0;
  std::size_t proximal_vertices = 0, proximal_triangles = 0;
  std::size_t above_kept = 0, below_kept = 0;
};
nlohmann::json to_json(const SurfaceSummary& s);

enum class Artifact { kBpMask, kLeafletMask, kLeafletMesh, kProximalMesh, kBpPhi, kLeafletPhi };
Artifact parse_artifact(std::string_view name);
const char* to_string(Artifact a);

struct Overlay {
  bool current = false;
  bool previous = false;
  bool annulus = false;
  bool any() const { return current || previous || annulus; }
};
/// Comma separated list of cur, prev, annulus; "none" or empty for no overlay.
Overlay parse_overlay(std::string_view list);

/// One interactive segmentation: a single volume, its annulus, and a snapshot
/// stack per contour stage. Not internally synchronized.
class Session {
 public:
  explicit Session(Volume3D volume, PipelineConfig config = {});

  SessionStage stage() const { return stage_; }
  const Volume3D& volume() const { return volume_; }
  const PipelineConfig& config() const { return config_; }
  const std::optional<AnnulusModel>& annulus() const { return annulus_; }
  const std::optional<AnnulusDefinition>& annulus_definition() const { return annulus_def_; }
  const std::vector<LevelSetState>& snapshots(Stage stage) const {
    return stage == Stage::kBloodPool ? bp_ : leaflet_;
  }
  /// Speed image, computed at the first step.
  const SpeedImage& speed();
  const std::optional<SpeedImage>& speed_if_ready() const { return speed_; }

  /// Allowed from VOLUME_LOADED up to BP_ACTIVE. Replacing the annulus drops
  /// blood-pool snapshots and returns to ANNULUS_SET.
  AnnulusModel set_annulus(const AnnulusDefinition& def);

  /// Advances the stage's current snapshot (seeding it on the first step) and
  /// pushes the result. A collapse pushes nothing and reports its status.
  StepSummary step(Stage stage, int iterations, const std::optional<ContourParams>& params = {});

  /// Pops the newest snapshot of the active stage; popping the last one
  /// returns to the previous stage's accepted state.
  StepSummary undo();

  SessionStage accept(Stage stage);

  /// Idempotent once SURFACE_READY. Throws kEmptySurface, leaving the stage
  /// unchanged, when no proximal triangle survives.
  SurfaceSummary extract_surface();
  const std::optional<SurfaceSummary>& surface_summary() const { return surface_; }
  const TriMesh& leaflet_mesh() const { return leaflet_mesh_; }
  const TriMesh& bloodpool_mesh() const { return bp_mesh_; }
  const TriMesh& proximal_mesh() const { return proximal_mesh_; }

  StepSummary current_summary(Stage stage) const;
  const Window& window() const { return window_; }

  SliceImage slice(SliceAxis axis, int index, const Overlay& overlay) const;
  std::string slice_png(SliceAxis axis, int index, const Overlay& overlay) const {
    return encode_png(slice(axis, index, overlay));
  }

  /// NRRD for masks and phi fields, STL or PLY for meshes. Throws kNotFound
  /// when the artifact does not exist yet or the extension does not apply.
  std::string export_artifact(Artifact what, std::string_view ext) const;

  nlohmann::json summary() const;

  /// Zip of NRRD volumes plus manifest.json; load() restores snapshots
  /// bit-exactly and recomputes derived data.
  std::string save() const;
  static Session load(std::string_view zip);

 private:
  std::vector<LevelSetState>& stack(Stage stage) { return stage == Stage::kBloodPool ? bp_ : leaflet_; }
  const std::vector<LevelSetState>* display_stack() const;
  void require(bool ok, ErrorCode code, const std::string& message) const;

  Volume3D volume_;
  PipelineConfig config_;
  Window window_;
  SessionStage stage_ = SessionStage::kVolumeLoaded;
  std::optional<AnnulusDefinition> annulus_def_;
  std::optional<AnnulusModel> annulus_;
  std::optional<SpeedImage> speed_;
  std::vector<LevelSetState> bp_;
  std::vector<LevelSetState> leaflet_;
  std::optional<SurfaceSummary> surface_;
  TriMesh leaflet_mesh_, bp_mesh_, proximal_mesh_;
};

}  // namespace mvseg
