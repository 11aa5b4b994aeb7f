// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <nlohmann/json_fwd.hpp>

#include "mvseg/error.hpp"
#include "mvseg/session.hpp"

namespace httplib {
class Server;
}

namespace mvseg {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_sessions = 16;
};

int http_status(ErrorCode code);
nlohmann::json error_body(const Error& e);

/// Sessions keyed by random hex id. Commands on one session hold its lock
/// exclusively; slice and export reads share it.
class SessionStore {
 public:
  struct Entry {
    std::shared_mutex mutex;
    Session session;
    explicit Entry(Session s) : session(std::move(s)) {}
  };

  explicit SessionStore(std::size_t max_sessions = 16) : max_sessions_(max_sessions) {}

  /// Empty when the store is full.
  std::optional<std::string> add(Session session);
  std::shared_ptr<Entry> get(const std::string& id) const;  // throws kNotFound
  bool erase(const std::string& id);
  std::size_t size() const;

 private:
  std::string new_id();

  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t max_sessions_;
  std::uint64_t counter_ = 0;
};

/// Builds a session from a POST /sessions body: a JSON object
/// {"phantom": {...}, "config": {...}}, a raw NRRD file, or a saved session zip.
/// `extra` receives creation details such as the phantom's annulus points.
Session session_from_payload(std::string_view body, std::string_view content_type,
                             nlohmann::json* extra = nullptr);

void install_routes(httplib::Server& server, SessionStore& store);

}  // namespace mvseg
