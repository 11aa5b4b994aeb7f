// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "mvseg/phantom.hpp"
#include "mvseg/service.hpp"
#include "mvseg/slice.hpp"
#include "test_support.hpp"

#include <httplib.h>

namespace mvseg {
namespace {

using nlohmann::json;

PhantomSpec small_spec() {
  PhantomSpec s;
  s.dims = {40, 40, 40};
  s.spacing = Vec3::Constant(0.9);
  s.atrium_radius = 8.0;
  s.leaflet_thickness = 2.0;
  s.leaflet_sag = 3.0;
  return s;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    install_routes(server_, store_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  json post_ok(const std::string& path, const json& body, int status = 200) {
    auto r = post(path, body);
    EXPECT_TRUE(r);
    EXPECT_EQ(r->status, status) << path << ": " << r->body;
    return json::parse(r->body);
  }

  std::string create_phantom_session() {
    const json j = post_ok("/sessions", {{"phantom", phantom_spec_to_json(small_spec())}}, 201);
    EXPECT_EQ(j.at("stage"), "VOLUME_LOADED");
    EXPECT_TRUE(j.contains("annulus_suggestion"));
    return j.at("id");
  }

  SessionStore store_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST(ServiceStatus, ErrorCodeMapping) {
  EXPECT_EQ(http_status(ErrorCode::kParseError), 400);
  EXPECT_EQ(http_status(ErrorCode::kNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::kOutOfBounds), 404);
  EXPECT_EQ(http_status(ErrorCode::kWrongStage), 409);
  EXPECT_EQ(http_status(ErrorCode::kNothingToUndo), 409);
  EXPECT_EQ(http_status(ErrorCode::kInvalidArgument), 422);
  EXPECT_EQ(http_status(ErrorCode::kContourCollapsed), 422);
  const json body = error_body(Error(ErrorCode::kWrongStage, "nope", "stage"));
  EXPECT_EQ(body.at("code"), "WRONG_STAGE");
  EXPECT_EQ(body.at("detail"), "stage");
}

TEST(SessionStoreTest, LimitAndErase) {
  SessionStore store(2);
  const Volume3D v(testing::cube_geometry(4, 1.0), 0.0f);
  const auto a = store.add(Session(v));
  ASSERT_TRUE(a);
  ASSERT_TRUE(store.add(Session(v)));
  EXPECT_FALSE(store.add(Session(v)));
  EXPECT_TRUE(store.erase(*a));
  EXPECT_FALSE(store.erase(*a));
  EXPECT_MVSEG_ERROR(store.get(*a), ErrorCode::kNotFound);
  EXPECT_EQ(store.size(), 1u);
}

TEST_F(ServiceTest, Health) {
  auto r = client_->Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body).at("status"), "ok");
}

TEST_F(ServiceTest, ErrorResponses) {
  auto bad = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body).at("code"), "PARSE_ERROR");

  auto missing = client_->Get("/sessions/00ff");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body).at("code"), "NOT_FOUND");

  const std::string id = create_phantom_session();
  auto early = post("/sessions/" + id + "/steps", {{"stage", "BLOODPOOL"}, {"iterations", 5}});
  ASSERT_TRUE(early);
  EXPECT_EQ(early->status, 409);
  EXPECT_EQ(json::parse(early->body).at("code"), "WRONG_STAGE");

  auto undo = post("/sessions/" + id + "/undo", json::object());
  EXPECT_EQ(undo->status, 409);

  json five = annulus_to_json(generate_phantom(small_spec()).annulus);
  auto& pts = five.at("points");
  pts.erase(pts.begin() + 5, pts.end());
  auto few = post("/sessions/" + id + "/annulus", five);
  EXPECT_EQ(few->status, 422);
  EXPECT_EQ(json::parse(few->body).at("detail"), "points");

  auto unknown = post("/sessions/" + id + "/steps", {{"stage", "BLOODPOOL"}, {"iterations", 1}, {"x", 1}});
  EXPECT_EQ(unknown->status, 400);

  auto slice = client_->Get("/sessions/" + id + "/slices/k/400");
  EXPECT_EQ(slice->status, 404);
  auto axis = client_->Get("/sessions/" + id + "/slices/q/4");
  EXPECT_EQ(axis->status, 400);

  auto gone = client_->Delete("/sessions/" + id);
  EXPECT_EQ(gone->status, 204);
  EXPECT_EQ(client_->Get("/sessions/" + id)->status, 404);
}

TEST_F(ServiceTest, SlicePng) {
  const std::string id = create_phantom_session();
  auto r = client_->Get("/sessions/" + id + "/slices/k/20");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  const SliceImage img = decode_png(r->body);
  EXPECT_EQ(img.width, 40);
  EXPECT_EQ(img.height, 40);
}

TEST_F(ServiceTest, ReplayMatchesDirectSession) {
  const Phantom ph = generate_phantom(small_spec());
  const json annulus = annulus_to_json(ph.annulus);

  const std::string id = create_phantom_session();
  const std::string base = "/sessions/" + id;
  post_ok(base + "/annulus", annulus);
  post_ok(base + "/steps", {{"stage", "BLOODPOOL"}, {"iterations", 30}});
  post_ok(base + "/steps", {{"stage", "BLOODPOOL"}, {"iterations", 5}});
  const json undone = post_ok(base + "/undo", json::object());
  EXPECT_EQ(undone.at("iterations_done"), 30);
  EXPECT_EQ(post_ok(base + "/accept", {{"stage", "BLOODPOOL"}}).at("stage"), "BP_ACCEPTED");
  post_ok(base + "/steps", {{"stage", "LEAFLET"}, {"iterations", 15}});
  post_ok(base + "/accept", {{"stage", "LEAFLET"}});

  Session direct(ph.volume);
  direct.set_annulus(annulus_from_json(annulus));
  direct.step(Stage::kBloodPool, 30);
  direct.accept(Stage::kBloodPool);
  direct.step(Stage::kLeaflet, 15);
  direct.accept(Stage::kLeaflet);

  for (const char* name : {"bp_mask.nrrd", "leaflet_mask.nrrd", "leaflet_phi.nrrd"}) {
    auto r = client_->Get(base + "/export/" + name);
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 200) << name << ": " << r->body;
    const std::string stem = std::string(name).substr(0, std::string(name).find('.'));
    EXPECT_EQ(r->body, direct.export_artifact(parse_artifact(stem), "nrrd")) << name;
  }

  auto surface = post(base + "/surface", json::object());
  ASSERT_TRUE(surface);
  if (surface->status == 200) {
    direct.extract_surface();
    auto stl = client_->Get(base + "/export/proximal_mesh.stl");
    ASSERT_EQ(stl->status, 200);
    EXPECT_EQ(stl->body, direct.export_artifact(Artifact::kProximalMesh, "stl"));
  } else {
    EXPECT_MVSEG_ERROR(direct.extract_surface(), ErrorCode::kEmptySurface);
  }

  auto archive = client_->Get(base + "/archive");
  ASSERT_EQ(archive->status, 200);
  const Session restored = Session::load(archive->body);
  EXPECT_EQ(restored.stage(), direct.stage());
}

}  // namespace
}  // namespace mvseg
