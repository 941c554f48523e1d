#include <doctest.h>

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "service.hpp"
#include "temp_dir.hpp"

using nlohmann::json;
using m2n2::service::Clock;
using m2n2::service::Service;
using m2n2::service::ServiceOptions;

namespace {

// Service on an ephemeral port with a controllable clock.
struct Harness {
  m2n2::testing::TempDir dir{"m2n2_http"};
  Clock::time_point now = Clock::now();
  std::unique_ptr<Service> service;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  Harness() {
    REQUIRE(m2n2_synth_write_suite(dir.path().c_str(), "overlap", 2, 9) == M2N2_OK);
    ServiceOptions opts;
    opts.data_dir = dir.path();
    opts.idle_timeout = std::chrono::seconds(60);
    opts.now = [this] { return now; };
    service = std::make_unique<Service>(opts);
    REQUIRE(service->load_bundles() == 2);
    service->install(server);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~Harness() {
    server.stop();
    thread.join();
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }
};

std::string create_session(httplib::Client& c, const json& body) {
  const auto res = c.Post("/v1/sessions", body.dump(), "application/json");
  REQUIRE(res);
  REQUIRE(res->status == 201);
  return json::parse(res->body)["session_id"].get<std::string>();
}

}  // namespace

TEST_CASE("bundle listing and metadata") {
  Harness h;
  auto c = h.client();
  const auto list = c.Get("/v1/bundles");
  REQUIRE(list);
  CHECK(list->status == 200);
  const auto ids = json::parse(list->body)["bundles"];
  REQUIRE(ids.size() == 2);
  const auto meta = c.Get("/v1/bundles/scene_000");
  REQUIRE(meta);
  CHECK(json::parse(meta->body)["height"] == 128);
  const auto img = c.Get("/v1/bundles/scene_000/image.png");
  REQUIRE(img);
  CHECK(img->status == 200);
  CHECK(img->get_header_value("Content-Type") == "image/png");
  CHECK(c.Get("/v1/bundles/nope")->status == 404);
}

TEST_CASE("session lifecycle over HTTP") {
  Harness h;
  auto c = h.client();
  CHECK(c.Post("/v1/sessions", "{\"bundle_id\": \"missing\"}", "application/json")->status == 404);
  CHECK(c.Post("/v1/sessions", "not json", "application/json")->status == 400);
  CHECK(c.Post("/v1/sessions", "{\"bundle_id\": \"scene_000\", \"gt_id\": \"obj_9\"}", "application/json")->status ==
        404);

  const std::string id = create_session(c, {{"bundle_id", "scene_000"}, {"gt_id", "obj_0"}});
  CHECK(id.size() == 32);
  CHECK(h.service->session_count() == 1);

  const auto empty_undo = c.Post("/v1/sessions/" + id + "/undo", "", "application/json");
  CHECK(empty_undo->status == 409);

  const auto click = c.Post("/v1/sessions/" + id + "/clicks", R"({"x": 40, "y": 64, "label": 1})", "application/json");
  REQUIRE(click);
  REQUIRE(click->status == 200);
  const json body = json::parse(click->body);
  CHECK(body["mask_rle"]["height"] == 128);
  CHECK(body["mask_rle"]["width"] == 128);
  std::uint64_t total = 0, fg = 0;
  const auto& counts = body["mask_rle"]["counts"];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total += counts[i].get<std::uint64_t>();
    if (i % 2) fg += counts[i].get<std::uint64_t>();
  }
  CHECK(total == 128 * 128);
  CHECK(fg == body["area"].get<std::uint64_t>());
  CHECK(body["limit"].is_null());
  CHECK(body["click_count"] == 1);
  CHECK(body.contains("iou"));
  CHECK(body.contains("pass2_triggered"));
  CHECK(body.contains("fallback_used"));

  CHECK(c.Post("/v1/sessions/" + id + "/clicks", R"({"x": 400, "y": 64, "label": 1})", "application/json")->status ==
        400);
  CHECK(c.Post("/v1/sessions/" + id + "/clicks", R"({"x": 4, "y": 64})", "application/json")->status == 400);
  CHECK(c.Post("/v1/sessions/" + id + "/clicks", R"({"x": 4, "y": 64, "label": 7})", "application/json")->status ==
        400);

  const auto mask = c.Get("/v1/sessions/" + id + "/mask.png");
  REQUIRE(mask);
  CHECK(mask->status == 200);
  CHECK(mask->body.rfind("\x89PNG", 0) == 0);

  const auto undo = c.Post("/v1/sessions/" + id + "/undo", "", "application/json");
  REQUIRE(undo->status == 200);
  CHECK(json::parse(undo->body)["click_count"] == 0);
  CHECK(json::parse(undo->body)["area"] == 0);

  CHECK(c.Delete("/v1/sessions/" + id)->status == 204);
  CHECK(c.Delete("/v1/sessions/" + id)->status == 404);
  CHECK(c.Post("/v1/sessions/" + id + "/clicks", R"({"x": 1, "y": 1, "label": 1})", "application/json")->status ==
        404);
}

TEST_CASE("idle sessions expire") {
  Harness h;
  auto c = h.client();
  const std::string id = create_session(c, {{"bundle_id", "scene_001"}});
  h.now += std::chrono::seconds(30);
  CHECK(c.Get("/v1/sessions/" + id + "/mask.png")->status == 200);
  h.now += std::chrono::seconds(45);
  CHECK(c.Get("/v1/sessions/" + id + "/mask.png")->status == 200);
  h.now += std::chrono::seconds(61);
  CHECK(c.Get("/v1/sessions/" + id + "/mask.png")->status == 404);
  CHECK(h.service->session_count() == 0);
}

TEST_CASE("environment settings") {
  ::setenv("M2N2_PORT", "9123", 1);
  ::setenv("M2N2_DATA_DIR", "/srv/bundles", 1);
  ::setenv("M2N2_SESSION_TTL", "42", 1);
  const auto s = m2n2::service::settings_from_env();
  CHECK(s.port == 9123);
  CHECK(s.data_dir == "/srv/bundles");
  CHECK(s.idle_timeout == std::chrono::seconds(42));
  ::unsetenv("M2N2_PORT");
  ::unsetenv("M2N2_DATA_DIR");
  ::unsetenv("M2N2_SESSION_TTL");
  const auto d = m2n2::service::settings_from_env();
  CHECK(d.port == 8080);
  CHECK(d.data_dir == "data");
}
