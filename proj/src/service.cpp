// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/service.hpp"

#include <cstdio>
#include <random>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mvseg/nrrd.hpp"
#include "mvseg/phantom.hpp"
#include "mvseg/version.hpp"

namespace mvseg {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return 400;
    case ErrorCode::kNotFound:
    case ErrorCode::kOutOfBounds: return 404;
    case ErrorCode::kWrongStage:
    case ErrorCode::kNothingToUndo: return 409;
    case ErrorCode::kIoError: return 500;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kGeometryMismatch:
    case ErrorCode::kContourCollapsed:
    case ErrorCode::kEmptyRegion:
    case ErrorCode::kEmptySurface: return 422;
  }
  return 500;
}

nlohmann::json error_body(const Error& e) {
  return {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.field()}};
}

std::optional<std::string> SessionStore::add(Session session) {
  auto entry = std::make_shared<Entry>(std::move(session));
  std::lock_guard<std::mutex> lock(mutex_);
  if (sessions_.size() >= max_sessions_) return std::nullopt;
  std::string id;
  do id = new_id();
  while (sessions_.count(id));
  sessions_.emplace(id, std::move(entry));
  return id;
}

std::string SessionStore::new_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(rng() ^ ++counter_));
  return buf;
}

std::shared_ptr<SessionStore::Entry> SessionStore::get(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "no session " + id, "id");
  return it->second;
}

bool SessionStore::erase(const std::string& id) {
  std::lock_guard<std::mutex> lock(mutex_);
  return sessions_.erase(id) > 0;
}

std::size_t SessionStore::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return sessions_.size();
}

namespace {

nlohmann::json parse_json(std::string_view body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed JSON body: ") + e.what(), "body");
  }
}

bool is_zip(std::string_view body) { return body.size() >= 4 && body.substr(0, 4) == "PK\x03\x04"; }

}  // namespace

Session session_from_payload(std::string_view body, std::string_view content_type,
                             nlohmann::json* extra) {
  if (is_zip(body)) return Session::load(body);
  const bool json = content_type.find("json") != std::string_view::npos ||
                    (!body.empty() && body.front() == '{');
  if (!json) return Session(read_nrrd(body));

  const nlohmann::json j = parse_json(body);
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "body must be a JSON object", "body");
  for (const auto& [key, value] : j.items())
    if (key != "phantom" && key != "config")
      throw Error(ErrorCode::kParseError, "unknown field '" + key + "'", key);
  if (!j.contains("phantom"))
    throw Error(ErrorCode::kParseError, "JSON sessions need a 'phantom' spec", "phantom");
  PipelineConfig config;
  if (j.contains("config")) config = config_from_json(j.at("config"));
  const PhantomSpec spec = phantom_spec_from_json(j.at("phantom"));
  Phantom ph = generate_phantom(spec);
  if (extra) {
    (*extra)["phantom"] = phantom_spec_to_json(spec);
    (*extra)["annulus_suggestion"] = annulus_to_json(ph.annulus);
  }
  return Session(std::move(ph.volume), config);
}

namespace {

void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, error_body(e), http_status(e.code()));
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::bad_alloc&) {
      send_error(res, Error(ErrorCode::kIoError, "out of memory", "body"));
    } catch (const std::exception& e) {
      send_error(res, Error(ErrorCode::kIoError, e.what()));
    }
  };
}

nlohmann::json state_json(const std::string& id, const Session& s) {
  nlohmann::json j = s.summary();
  j["id"] = id;
  return j;
}

int parse_index(const std::string& text) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (used == text.size() && v >= INT32_MIN && v <= INT32_MAX) return static_cast<int>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kOutOfBounds, "slice index '" + text + "' is out of range", "index");
}

const char* mime(std::string_view ext) {
  if (ext == "stl") return "model/stl";
  if (ext == "ply") return "application/octet-stream";
  return "application/octet-stream";
}

}  // namespace

void install_routes(httplib::Server& server, SessionStore& store) {
  using Req = httplib::Request;
  using Res = httplib::Response;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  server.Options(R"(.*)", [](const Req&, Res& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/health", [](const Req&, Res& res) {
    send_json(res, {{"status", "ok"}, {"version", kVersion}});
  });

  server.Post("/sessions", guarded([&store](const Req& req, Res& res) {
    nlohmann::json extra = nlohmann::json::object();
    Session s = session_from_payload(req.body, req.get_header_value("Content-Type"), &extra);
    nlohmann::json j = s.summary();
    const auto id = store.add(std::move(s));
    if (!id) {
      send_json(res, {{"code", "SESSION_LIMIT"}, {"message", "too many open sessions"}, {"detail", ""}},
                503);
      return;
    }
    j["id"] = *id;
    j.update(extra);
    send_json(res, j, 201);
  }));

  server.Get(R"(/sessions/([0-9a-f]+))", guarded([&store](const Req& req, Res& res) {
    auto e = store.get(req.matches[1]);
    std::shared_lock lock(e->mutex);
    send_json(res, state_json(req.matches[1], e->session));
  }));

  server.Delete(R"(/sessions/([0-9a-f]+))", guarded([&store](const Req& req, Res& res) {
    if (!store.erase(req.matches[1]))
      throw Error(ErrorCode::kNotFound, "no session " + std::string(req.matches[1]), "id");
    res.status = 204;
  }));

  server.Post(R"(/sessions/([0-9a-f]+)/annulus)", guarded([&store](const Req& req, Res& res) {
    auto e = store.get(req.matches[1]);
    const AnnulusDefinition def = annulus_from_json(parse_json(req.body));
    std::unique_lock lock(e->mutex);
    const AnnulusModel m = e->session.set_annulus(def);
    nlohmann::json j = model_summary(m);
    j["stage"] = to_string(e->session.stage());
    send_json(res, j);
  }));

  server.Post(R"(/sessions/([0-9a-f]+)/steps)", guarded([&store](const Req& req, Res& res) {
    auto e = store.get(req.matches[1]);
    const nlohmann::json j = parse_json(req.body);
    if (!j.is_object() || !j.contains("stage") || !j.contains("iterations"))
      throw Error(ErrorCode::kParseError, "steps body needs 'stage' and 'iterations'", "body");
    for (const auto& [key, value] : j.items())
      if (key != "stage" && key != "iterations" && key != "params")
        throw Error(ErrorCode::kParseError, "unknown field '" + key + "'", key);
    if (!j.at("stage").is_string())
      throw Error(ErrorCode::kParseError, "'stage' must be a string", "stage");
    const Stage stage = parse_stage(j.at("stage").get<std::string>());
    if (!j.at("iterations").is_number_integer())
      throw Error(ErrorCode::kInvalidArgument, "'iterations' must be an integer", "iterations");
    const auto n = j.at("iterations").get<long long>();
    const int iterations = n < INT32_MIN || n > INT32_MAX ? -1 : static_cast<int>(n);
    std::unique_lock lock(e->mutex);
    std::optional<ContourParams> params;
    if (j.contains("params") && !j.at("params").is_null())
      params = params_from_json(j.at("params"), e->session.config().params(stage));
    nlohmann::json out = to_json(e->session.step(stage, iterations, params));
    out["session_stage"] = to_string(e->session.stage());
    send_json(res, out);
  }));

  server.Post(R"(/sessions/([0-9a-f]+)/undo)", guarded([&store](const Req& req, Res& res) {
    auto e = store.get(req.matches[1]);
    std::unique_lock lock(e->mutex);
    nlohmann::json out = to_json(e->session.undo());
    out["session_stage"] = to_string(e->session.stage());
    send_json(res, out);
  }));

  server.Post(R"(/sessions/([0-9a-f]+)/accept)", guarded([&store](const Req& req, Res& res) {
    auto e = store.get(req.matches[1]);
    const nlohmann::json j = parse_json(req.body);
    if (!j.is_object() || !j.contains("stage") || !j.at("stage").is_string())
      throw Error(ErrorCode::kParseError, "accept body needs 'stage'", "stage");
    const Stage stage = parse_stage(j.at("stage").get<std::string>());
    std::unique_lock lock(e->mutex);
    send_json(res, {{"stage", to_string(e->session.accept(stage))}});
  }));

  server.Post(R"(/sessions/([0-9a-f]+)/surface)", guarded([&store](const Req& req, Res& res) {
    auto e = store.get(req.matches[1]);
    std::unique_lock lock(e->mutex);
    nlohmann::json out = to_json(e->session.extract_surface());
    out["stage"] = to_string(e->session.stage());
    send_json(res, out);
  }));

  server.Get(R"(/sessions/([0-9a-f]+)/slices/([^/]+)/([^/]+))",
             guarded([&store](const Req& req, Res& res) {
               auto e = store.get(req.matches[1]);
               SliceAxis axis;
               try {
                 axis = parse_slice_axis(std::string(req.matches[2]));
               } catch (const Error& err) {
                 throw Error(ErrorCode::kParseError, err.what(), "axis");
               }
               const int index = parse_index(req.matches[3]);
               const Overlay overlay = parse_overlay(req.get_param_value("overlay"));
               std::shared_lock lock(e->mutex);
               res.set_content(e->session.slice_png(axis, index, overlay), "image/png");
             }));

  server.Get(R"(/sessions/([0-9a-f]+)/export/([a-z_]+)\.([a-z]+))",
             guarded([&store](const Req& req, Res& res) {
               auto e = store.get(req.matches[1]);
               const Artifact what = parse_artifact(std::string(req.matches[2]));
               const std::string ext = req.matches[3];
               std::shared_lock lock(e->mutex);
               res.set_content(e->session.export_artifact(what, ext), mime(ext));
               res.set_header("Content-Disposition", "attachment; filename=\"" +
                                                         std::string(to_string(what)) + "." + ext +
                                                         "\"");
             }));

  server.Get(R"(/sessions/([0-9a-f]+)/archive)", guarded([&store](const Req& req, Res& res) {
    auto e = store.get(req.matches[1]);
    std::shared_lock lock(e->mutex);
    res.set_content(e->session.save(), "application/zip");
  }));

  server.set_error_handler([](const Req&, Res& res) {
    if (!res.body.empty()) return;
    const int status = res.status;
    send_json(res, {{"code", status == 404 ? "NOT_FOUND" : "HTTP_ERROR"},
                    {"message", httplib::status_message(status)},
                    {"detail", ""}},
              status);
  });
}

}  // namespace mvseg
