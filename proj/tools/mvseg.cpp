// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

// mvseg command line: segment, evaluate, phantom, serve.

#include <csignal>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <png.h>
#include <zlib.h>

#include "mvseg/annulus.hpp"
#include "mvseg/error.hpp"
#include "mvseg/mesh_io.hpp"
#include "mvseg/metrics.hpp"
#include "mvseg/nrrd.hpp"
#include "mvseg/parallel.hpp"
#include "mvseg/phantom.hpp"
#include "mvseg/service.hpp"
#include "mvseg/session.hpp"
#include "mvseg/version.hpp"

// After Eigen: resolv.h defines _res.
#include <httplib.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// JSON config files: top-level keys are options, objects are subcommand sections.
class ConfigJson : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames()[0];
      if (opt->count() > 0) j[name] = opt->as<std::string>();
      else if (default_also && !opt->get_default_str().empty()) j[name] = opt->get_default_str();
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      const std::string text = to_config(sub, default_also, false, "");
      if (text != "null") j[sub->get_name()] = json::parse(text);
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("config JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void flatten(const json& j, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array()) {
        for (const auto& e : v) item.inputs.push_back(scalar(e));
      } else {
        item.inputs.push_back(scalar(v));
      }
      out.push_back(std::move(item));
    }
  }
};

std::string env_name(const std::string& flag) {
  std::string s = "MVSEG_";
  for (char c : flag) s += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

template <typename T>
CLI::Option* add(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option("--" + name, value, help)->envname(env_name(name))->capture_default_str();
}

CLI::Option* add_flag(CLI::App* app, const std::string& name, bool& value, const std::string& help) {
  return app->add_flag("--" + name, value, help)->envname(env_name(name));
}

// Environment values beat config-file values; command-line values beat both.
void apply_env_overrides(CLI::App* app, int argc, char** argv) {
  for (CLI::Option* opt : app->get_options({})) {
    if (opt->get_lnames().empty()) continue;
    const std::string flag = "--" + opt->get_lnames()[0];
    const char* env = std::getenv(env_name(opt->get_lnames()[0]).c_str());
    if (!env) continue;
    bool on_command_line = false;
    for (int i = 1; i < argc; ++i) {
      const std::string_view arg = argv[i];
      if (arg == flag || arg.substr(0, flag.size() + 1) == flag + "=") on_command_line = true;
    }
    if (on_command_line) continue;
    opt->clear();
    opt->add_result(env);
    opt->run_callback();
  }
  for (CLI::App* sub : app->get_subcommands()) apply_env_overrides(sub, argc, argv);
}

struct StageFailure {
  std::string stage;
  std::string message;
};

template <typename Fn>
auto in_stage(const std::string& stage, Fn fn) {
  try {
    return fn();
  } catch (const mvseg::Error& e) {
    throw StageFailure{stage, std::string(mvseg::to_string(e.code())) + ": " + e.what()};
  } catch (const std::exception& e) {
    throw StageFailure{stage, e.what()};
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mvseg::Error(mvseg::ErrorCode::kIoError, "cannot read " + path.string(), "path");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw mvseg::Error(mvseg::ErrorCode::kIoError, "cannot write " + path.string(), "path");
}

json versions() {
  return {{"mvseg", mvseg::kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"zlib", zlibVersion()},
          {"libpng", PNG_LIBPNG_VER_STRING},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

// ---------------------------------------------------------------- segment

struct SegmentArgs {
  std::string input, annulus, out = "out", format = "stl", pipeline, shell_side, time_step;
  int bp_iters = 300, leaflet_iters = 200, workers = 0;
  bool dump_phi = false, roi_clamp = false;
};

int run_segment(const SegmentArgs& a) {
  const auto t_start = std::chrono::steady_clock::now();
  mvseg::PipelineConfig config;
  if (!a.pipeline.empty()) {
    try {
      config = mvseg::config_from_json(json::parse(read_file(a.pipeline)));
    } catch (const json::exception& e) {
      throw StageFailure{"config", std::string("pipeline JSON: ") + e.what()};
    } catch (const mvseg::Error& e) {
      throw StageFailure{"config", e.what()};
    }
  }
  in_stage("config", [&] {
    if (a.roi_clamp) config.shell.roi_clamp = true;
    if (!a.shell_side.empty()) config.shell.side = mvseg::parse_shell_side(a.shell_side);
    if (!a.time_step.empty()) {
      const auto p = mvseg::parse_time_step_policy(a.time_step);
      config.bloodpool.time_step = p;
      config.leaflet.time_step = p;
    }
    config.validate();
    return 0;
  });
  const auto format = in_stage("config", [&] { return mvseg::parse_mesh_format(a.format); });

  const auto definition = in_stage("load", [&] { return mvseg::load_annulus_json(a.annulus); });
  const std::string volume_bytes = in_stage("load", [&] { return read_file(a.input); });
  mvseg::Session session = in_stage("load", [&] {
    return mvseg::Session(mvseg::read_nrrd(volume_bytes), config);
  });
  in_stage("annulus", [&] { return session.set_annulus(definition); });

  json timings;
  auto t0 = std::chrono::steady_clock::now();
  in_stage("speed", [&] { return session.speed().beta; });
  timings["speed"] = seconds_since(t0);

  json results;
  auto run_stage = [&](mvseg::Stage stage, int iters, const char* name) {
    const auto t = std::chrono::steady_clock::now();
    const mvseg::StepSummary s = in_stage(name, [&] { return session.step(stage, iters); });
    if (s.status != "OK") throw StageFailure{name, s.status + ": contour collapsed"};
    in_stage(name, [&] { return session.accept(stage); });
    timings[name] = seconds_since(t);
    results[name] = mvseg::to_json(s);
  };
  run_stage(mvseg::Stage::kBloodPool, a.bp_iters, "bloodpool");
  run_stage(mvseg::Stage::kLeaflet, a.leaflet_iters, "leaflet");

  t0 = std::chrono::steady_clock::now();
  results["surface"] = mvseg::to_json(in_stage("surface", [&] { return session.extract_surface(); }));
  timings["surface"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const std::string ext = mvseg::extension(format);
  json outputs;
  in_stage("export", [&] {
    fs::create_directories(a.out);
    auto emit = [&](mvseg::Artifact what, const std::string& e) {
      const std::string name = std::string(mvseg::to_string(what)) + "." + e;
      const std::string bytes = session.export_artifact(what, e);
      write_file(fs::path(a.out) / name, bytes);
      outputs[name] = mvseg::bytes_checksum(bytes);
    };
    emit(mvseg::Artifact::kBpMask, "nrrd");
    emit(mvseg::Artifact::kLeafletMask, "nrrd");
    emit(mvseg::Artifact::kLeafletMesh, ext);
    emit(mvseg::Artifact::kProximalMesh, ext);
    if (a.dump_phi) {
      emit(mvseg::Artifact::kBpPhi, "nrrd");
      emit(mvseg::Artifact::kLeafletPhi, "nrrd");
    }
    return 0;
  });
  timings["export"] = seconds_since(t0);
  timings["total"] = seconds_since(t_start);

  const auto& cfg = session.config();
  json manifest;
  manifest["tool"] = "mvseg";
  manifest["command"] = "segment";
  manifest["versions"] = versions();
  manifest["inputs"] = {{"volume", {{"path", a.input}, {"checksum", mvseg::bytes_checksum(volume_bytes)}}},
                        {"annulus", {{"path", a.annulus}, {"definition", mvseg::annulus_to_json(definition)}}}};
  manifest["budgets"] = {{"bloodpool", a.bp_iters}, {"leaflet", a.leaflet_iters}};
  manifest["workers"] = mvseg::worker_count();
  manifest["format"] = ext;
  manifest["config"] = mvseg::config_to_json(cfg);
  manifest["beta"] = session.speed().beta;
  manifest["beta_source"] = cfg.beta ? "configured" : "auto";
  manifest["time_step_policy"] = {{"bloodpool", mvseg::to_string(cfg.bloodpool.time_step)},
                                  {"leaflet", mvseg::to_string(cfg.leaflet.time_step)}};
  manifest["shell_side"] = mvseg::to_string(cfg.shell.side);
  manifest["proximal_epsilon_mm"] =
      cfg.proximal_epsilon_mm.value_or(0.25 * session.volume().geometry.min_spacing());
  const json summary = session.summary();
  manifest["geometry"] = summary["geometry"];
  json annulus = summary["annulus"];
  annulus.erase("samples");
  manifest["annulus"] = annulus;
  manifest["results"] = results;
  manifest["timings_s"] = timings;
  manifest["outputs"] = outputs;
  write_file(fs::path(a.out) / "run_manifest.json", manifest.dump(2) + "\n");
  std::cout << json({{"out", a.out}, {"outputs", outputs}, {"timings_s", timings}}).dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

enum class Kind { kMesh, kMask };

Kind kind_of(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".stl" || ext == ".ply") return Kind::kMesh;
  if (ext == ".nrrd" || ext == ".nhdr") return Kind::kMask;
  throw CLI::ValidationError(path, "expected .stl, .ply, .nrrd or .nhdr");
}

int run_evaluate(const std::string& pred, const std::string& gt, const std::string& out) {
  const Kind kp = kind_of(pred), kg = kind_of(gt);
  if (kp != kg) throw CLI::ValidationError("evaluate", "cannot compare a mesh with a mask");
  json report;
  in_stage("evaluate", [&] {
    if (kp == Kind::kMesh) {
      report["masd"] = mvseg::report_to_json(mvseg::masd(mvseg::load_mesh(pred), mvseg::load_mesh(gt)));
    } else {
      const auto a = mvseg::load_mask_nrrd(pred);
      const auto b = mvseg::load_mask_nrrd(gt);
      report["dice"] = mvseg::dice(a, b);
      report["masd"] = mvseg::report_to_json(mvseg::masd(mvseg::marching_cubes(a), mvseg::marching_cubes(b)));
    }
    return 0;
  });
  report["pred"] = pred;
  report["gt"] = gt;
  const std::string text = report.dump(2) + "\n";
  if (!out.empty()) write_file(out, text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- phantom

int run_phantom(const mvseg::PhantomSpec& spec, const std::string& out, bool gzip) {
  in_stage("phantom", [&] {
    const mvseg::Phantom ph = mvseg::generate_phantom(spec);
    fs::create_directories(out);
    mvseg::NrrdWriteOptions opts;
    if (gzip) opts.encoding = mvseg::NrrdEncoding::kGzip;
    mvseg::save_nrrd(ph.volume, fs::path(out) / "volume.nrrd", opts);
    mvseg::save_mask_nrrd(ph.gt_bloodpool, fs::path(out) / "gt_bloodpool.nrrd");
    mvseg::save_mask_nrrd(ph.gt_leaflet, fs::path(out) / "gt_leaflet.nrrd");
    write_file(fs::path(out) / "annulus.json", mvseg::annulus_to_json(ph.annulus).dump(2) + "\n");
    write_file(fs::path(out) / "phantom.json", mvseg::phantom_spec_to_json(spec).dump(2) + "\n");
    mvseg::export_mesh(mvseg::phantom_proximal_mesh(spec), mvseg::MeshFormat::kStlBinary,
                       fs::path(out) / "gt_proximal_mesh.stl");
    return 0;
  });
  std::cout << out << "\n";
  return 0;
}

// ---------------------------------------------------------------- serve

int run_serve(const mvseg::ServiceConfig& cfg) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  httplib::Server server;
  mvseg::SessionStore store(cfg.max_sessions);
  mvseg::install_routes(server, store);
  if (!server.bind_to_port(cfg.host, cfg.port)) {
    std::cerr << "mvseg serve: cannot bind " << cfg.host << ":" << cfg.port
              << " (address in use or not permitted)\n";
    return kExitRuntime;
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::cerr << "mvseg " << mvseg::kVersion << " listening on " << cfg.host << ":" << cfg.port << "\n";
  const bool ok = server.listen_after_bind();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mitral valve segmentation with two-stage geodesic active contours", "mvseg"};
  app.set_version_flag("--version", mvseg::kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML or JSON config file; sections name subcommands")
      ->envname("MVSEG_CONFIG");
  for (int i = 1; i + 1 < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && fs::path(argv[i + 1]).extension() == ".json")
      app.config_formatter(std::make_shared<ConfigJson>());
  }
  if (const char* env = std::getenv("MVSEG_CONFIG"); env && fs::path(env).extension() == ".json")
    app.config_formatter(std::make_shared<ConfigJson>());
  int workers = 0;
  add(&app, "workers", workers, "Worker threads (0: hardware concurrency)")->check(CLI::NonNegativeNumber);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Run both contour stages and extract the proximal surface");
  add(segment, "input", seg.input, "Input volume (NRRD)")->required()->check(CLI::ExistingFile);
  add(segment, "annulus", seg.annulus, "Annulus points JSON")->required()->check(CLI::ExistingFile);
  add(segment, "bp-iters", seg.bp_iters, "Blood-pool iterations")->check(CLI::Range(1, 1000000));
  add(segment, "leaflet-iters", seg.leaflet_iters, "Leaflet iterations")->check(CLI::Range(1, 1000000));
  add(segment, "out", seg.out, "Output directory");
  add(segment, "format", seg.format, "Mesh format")->check(CLI::IsMember({"stl", "ply"}));
  add(segment, "pipeline", seg.pipeline, "Pipeline parameters JSON")->check(CLI::ExistingFile);
  add(segment, "shell-side", seg.shell_side, "Leaflet shell side: outward, inward, both")
      ->check(CLI::IsMember({"outward", "inward", "both"}));
  add(segment, "time-step", seg.time_step, "Time-step policy: adaptive or worst_case")
      ->check(CLI::IsMember({"adaptive", "worst_case"}));
  add_flag(segment, "dump-phi", seg.dump_phi, "Also write the final level-set fields");
  add_flag(segment, "roi-clamp", seg.roi_clamp, "Clamp the leaflet shell to the annulus region");

  std::string pred, gt, report_out;
  auto* evaluate = app.add_subcommand("evaluate", "Compare a prediction with ground truth");
  add(evaluate, "pred", pred, "Predicted mesh or mask")->required()->check(CLI::ExistingFile);
  add(evaluate, "gt", gt, "Ground-truth mesh or mask")->required()->check(CLI::ExistingFile);
  add(evaluate, "out", report_out, "Report JSON path");

  mvseg::PhantomSpec spec;
  std::string phantom_out = "phantom";
  int dim = spec.dims[0];
  double spacing = spec.spacing[0];
  bool gzip = false;
  auto* phantom = app.add_subcommand("phantom", "Write a synthetic volume with ground truth");
  add(phantom, "out", phantom_out, "Output directory");
  add(phantom, "seed", spec.rng_seed, "Noise seed");
  add(phantom, "dim", dim, "Voxels per axis")->check(CLI::Range(8, 1024));
  add(phantom, "spacing", spacing, "Isotropic spacing (mm)")->check(CLI::PositiveNumber);
  add(phantom, "radius", spec.atrium_radius, "Atrium radius (mm)");
  add(phantom, "thickness", spec.leaflet_thickness, "Leaflet thickness (mm)");
  add(phantom, "coverage", spec.leaflet_coverage, "Closed fraction of the opening");
  add(phantom, "sag", spec.leaflet_sag, "Leaflet dome depth (mm)");
  add(phantom, "noise", spec.noise_sigma, "Noise sigma");
  add_flag(phantom, "gzip", gzip, "Gzip-encode the volume");

  mvseg::ServiceConfig service;
  auto* serve = app.add_subcommand("serve", "Serve the interactive session API over HTTP");
  add(serve, "host", service.host, "Bind address");
  add(serve, "port", service.port, "Port")->check(CLI::Range(0, 65535));
  add(serve, "max-sessions", service.max_sessions, "Open session limit")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
    apply_env_overrides(&app, argc, argv);
    if (workers > 0) mvseg::set_worker_count(workers);
    if (segment->parsed()) return run_segment(seg);
    if (evaluate->parsed()) return run_evaluate(pred, gt, report_out);
    if (phantom->parsed()) {
      spec.dims = {dim, dim, dim};
      spec.spacing = mvseg::Vec3::Constant(spacing);
      return run_phantom(spec, phantom_out, gzip);
    }
    if (serve->parsed()) return run_serve(service);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const StageFailure& f) {
    std::cerr << "mvseg: stage " << f.stage << " failed: " << f.message << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
