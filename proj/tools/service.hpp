#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "m2n2/m2n2.h"

namespace httplib {
class Server;
}

namespace m2n2::service {

using Clock = std::chrono::steady_clock;

struct ServiceOptions {
  std::filesystem::path data_dir = "data";
  std::chrono::seconds idle_timeout{1800};
  std::filesystem::path web_dir;  // optional static UI root
  m2n2_options pipeline{};
  std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

// Reads M2N2_PORT, M2N2_DATA_DIR, M2N2_SESSION_TTL and M2N2_WEB_DIR.
struct EnvSettings {
  int port = 8080;
  std::filesystem::path data_dir = "data";
  std::chrono::seconds idle_timeout{1800};
  std::filesystem::path web_dir;
};
EnvSettings settings_from_env();

// Session registry plus the /v1 routes. Bundles are loaded once and shared.
class Service {
 public:
  explicit Service(ServiceOptions opts);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Loads every bundle directory under data_dir; returns the number loaded.
  std::size_t load_bundles();
  void install(httplib::Server& server);

  std::size_t bundle_count() const { return bundles_.size(); }
  std::size_t session_count();
  std::size_t sweep_expired();

  struct BundleEntry {
    m2n2_bundle* handle = nullptr;
    std::filesystem::path dir;
  };

  struct SessionEntry {
    m2n2_session* handle = nullptr;
    std::string bundle_id;
    std::string gt_id;  // empty when no ground truth is bound
    std::mutex writer;
    Clock::time_point last_used;
    ~SessionEntry();
  };

  std::shared_ptr<SessionEntry> find_session(const std::string& id);

 private:
  std::string new_session_id();

  ServiceOptions opts_;
  std::map<std::string, BundleEntry> bundles_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
  std::uint64_t id_state_;
};

}  // namespace m2n2::service
