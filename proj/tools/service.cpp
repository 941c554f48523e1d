#include "service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace m2n2::service {
namespace {

using nlohmann::json;

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int http_status(m2n2_status s) {
  switch (s) {
    case M2N2_OUT_OF_BOUNDS:
    case M2N2_INVALID_ARGUMENT:
      return 400;
    case M2N2_EMPTY_HISTORY:
      return 409;
    default:
      return 500;
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

json click_payload(const Service::SessionEntry& s, const m2n2_bundle* bundle, const m2n2_click_info& info) {
  int height = 0, width = 0;
  m2n2_bundle_dims(bundle, &height, &width);
  std::size_t count = 0;
  m2n2_session_mask_rle(s.handle, nullptr, 0, &count);
  std::vector<std::uint32_t> runs(count);
  m2n2_session_mask_rle(s.handle, runs.data(), runs.size(), &count);
  json body = {{"mask_rle", {{"height", height}, {"width", width}, {"counts", runs}}},
               {"area", info.area},
               {"fallback_used", info.fallback_used != 0},
               {"pass2_triggered", info.pass2_triggered != 0},
               {"constraint_residual", info.constraint_residual != 0},
               {"area_delta", info.area_delta},
               {"limit", std::isfinite(info.limit) ? json(info.limit) : json(nullptr)},
               {"click_count", m2n2_session_click_count(s.handle)}};
  if (!s.gt_id.empty()) {
    double v = 0.0;
    if (m2n2_session_iou(s.handle, s.gt_id.c_str(), &v) == M2N2_OK) body["iou"] = v;
  }
  return body;
}

}  // namespace

EnvSettings settings_from_env() {
  EnvSettings s;
  s.port = std::stoi(env_or("M2N2_PORT", "8080"));
  s.data_dir = env_or("M2N2_DATA_DIR", "data");
  s.idle_timeout = std::chrono::seconds(std::stol(env_or("M2N2_SESSION_TTL", "1800")));
  s.web_dir = env_or("M2N2_WEB_DIR", "");
  return s;
}

Service::SessionEntry::~SessionEntry() { m2n2_session_free(handle); }

Service::Service(ServiceOptions opts) : opts_(std::move(opts)), id_state_(std::random_device{}()) {
  if (opts_.pipeline.temperature <= 0.0) m2n2_options_default(&opts_.pipeline);
}

Service::~Service() {
  {
    std::lock_guard<std::mutex> lock(sessions_mutex_);
    sessions_.clear();
  }
  for (auto& [id, b] : bundles_) m2n2_bundle_free(b.handle);
}

std::size_t Service::load_bundles() {
  std::vector<std::filesystem::path> dirs;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(opts_.data_dir, ec))
    if (e.is_directory() && std::filesystem::exists(e.path() / "meta.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    m2n2_bundle* b = nullptr;
    if (m2n2_bundle_open(dir.c_str(), &opts_.pipeline, &b) != M2N2_OK) {
      std::cerr << "skipping bundle " << dir << ": " << m2n2_last_error() << "\n";
      continue;
    }
    const std::string id = m2n2_bundle_id(b);
    if (bundles_.count(id)) {
      m2n2_bundle_free(b);
      continue;
    }
    bundles_[id] = BundleEntry{b, dir};
  }
  return bundles_.size();
}

std::string Service::new_session_id() {
  // splitmix64 over a random start; ids only need to be unique and unguessable enough for a desk tool
  auto next = [this] {
    std::uint64_t z = (id_state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(next()),
                static_cast<unsigned long long>(next()));
  return buf;
}

std::size_t Service::session_count() {
  std::lock_guard<std::mutex> lock(sessions_mutex_);
  return sessions_.size();
}

std::size_t Service::sweep_expired() {
  const auto now = opts_.now();
  std::lock_guard<std::mutex> lock(sessions_mutex_);
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_used > opts_.idle_timeout) {
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::shared_ptr<Service::SessionEntry> Service::find_session(const std::string& id) {
  std::lock_guard<std::mutex> lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  it->second->last_used = opts_.now();
  return it->second;
}

void Service::install(httplib::Server& server) {
  server.set_pre_routing_handler([this](const httplib::Request&, httplib::Response&) {
    sweep_expired();
    return httplib::Server::HandlerResponse::Unhandled;
  });

  server.Get("/v1/bundles", [this](const httplib::Request&, httplib::Response& res) {
    json ids = json::array();
    for (const auto& [id, b] : bundles_) ids.push_back(id);
    send_json(res, 200, {{"bundles", ids}});
  });

  server.Get(R"(/v1/bundles/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto it = bundles_.find(req.matches[1]);
    if (it == bundles_.end()) return send_error(res, 404, "unknown bundle");
    send_json(res, 200, json::parse(m2n2_bundle_meta_json(it->second.handle)));
  });

  server.Get(R"(/v1/bundles/([^/]+)/image\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto it = bundles_.find(req.matches[1]);
    if (it == bundles_.end()) return send_error(res, 404, "unknown bundle");
    std::ifstream in(it->second.dir / "image.png", std::ios::binary);
    if (!in) return send_error(res, 500, "image unreadable");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    res.set_content(bytes, "image/png");
  });

  server.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (!body.is_object() || !body.contains("bundle_id") || !body["bundle_id"].is_string())
      return send_error(res, 400, "expected {\"bundle_id\": string}");
    const auto it = bundles_.find(body["bundle_id"].get<std::string>());
    if (it == bundles_.end()) return send_error(res, 404, "unknown bundle");
    m2n2_bundle* b = it->second.handle;

    std::string gt_id;
    if (body.contains("gt_id")) {
      if (!body["gt_id"].is_string()) return send_error(res, 400, "gt_id must be a string");
      gt_id = body["gt_id"].get<std::string>();
      bool known = false;
      for (std::size_t i = 0; i < m2n2_bundle_gt_count(b); ++i) known = known || gt_id == m2n2_bundle_gt_id(b, i);
      if (!known) return send_error(res, 404, "unknown ground truth");
    } else if (m2n2_bundle_gt_count(b) == 1) {
      gt_id = m2n2_bundle_gt_id(b, 0);
    }

    auto entry = std::make_shared<SessionEntry>();
    if (m2n2_session_new(b, &entry->handle) != M2N2_OK) return send_error(res, 500, m2n2_last_error());
    entry->bundle_id = it->first;
    entry->gt_id = gt_id;
    entry->last_used = opts_.now();
    std::string id;
    {
      std::lock_guard<std::mutex> lock(sessions_mutex_);
      do id = new_session_id();
      while (sessions_.count(id));
      sessions_[id] = entry;
    }
    json meta = json::parse(m2n2_bundle_meta_json(b));
    send_json(res, 201,
              {{"session_id", id}, {"image_meta", meta}, {"gt_id", gt_id.empty() ? json(nullptr) : json(gt_id)}});
  });

  server.Post(R"(/v1/sessions/([0-9a-f]+)/clicks)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = find_session(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    const json body = json::parse(req.body, nullptr, false);
    if (!body.is_object() || !body.contains("x") || !body.contains("y") || !body.contains("label") ||
        !body["x"].is_number_integer() || !body["y"].is_number_integer() || !body["label"].is_number_integer())
      return send_error(res, 400, "expected {\"x\": int, \"y\": int, \"label\": 0|1}");
    std::unique_lock<std::mutex> writer(s->writer, std::try_to_lock);
    if (!writer.owns_lock()) return send_error(res, 409, "another click on this session is in flight");
    m2n2_click_info info{};
    const m2n2_status st = m2n2_session_add_click(s->handle, body["x"].get<int>(), body["y"].get<int>(),
                                                  body["label"].get<int>(), &info);
    if (st != M2N2_OK) return send_error(res, http_status(st), m2n2_last_error());
    send_json(res, 200, click_payload(*s, bundles_.at(s->bundle_id).handle, info));
  });

  server.Post(R"(/v1/sessions/([0-9a-f]+)/undo)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = find_session(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::unique_lock<std::mutex> writer(s->writer, std::try_to_lock);
    if (!writer.owns_lock()) return send_error(res, 409, "another click on this session is in flight");
    m2n2_click_info info{};
    const m2n2_status st = m2n2_session_undo(s->handle, &info);
    if (st != M2N2_OK) return send_error(res, http_status(st), m2n2_last_error());
    send_json(res, 200, click_payload(*s, bundles_.at(s->bundle_id).handle, info));
  });

  server.Get(R"(/v1/sessions/([0-9a-f]+)/mask\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = find_session(req.matches[1]);
    if (!s) return send_error(res, 404, "unknown session");
    std::unique_lock<std::mutex> writer(s->writer, std::try_to_lock);
    if (!writer.owns_lock()) return send_error(res, 409, "session is busy");
    std::uint8_t* data = nullptr;
    std::size_t size = 0;
    if (m2n2_session_mask_png_bytes(s->handle, &data, &size) != M2N2_OK)
      return send_error(res, 500, m2n2_last_error());
    res.set_content(reinterpret_cast<const char*>(data), size, "image/png");
    m2n2_buffer_free(data);
  });

  server.Delete(R"(/v1/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(sessions_mutex_);
    const auto it = sessions_.find(req.matches[1]);
    if (it == sessions_.end()) return send_error(res, 404, "unknown session");
    sessions_.erase(it);
    res.status = 204;
  });

  if (!opts_.web_dir.empty() && std::filesystem::is_directory(opts_.web_dir))
    server.set_mount_point("/", opts_.web_dir.string());
}

}  // namespace m2n2::service
