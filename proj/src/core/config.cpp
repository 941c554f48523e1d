#include "config.hpp"

#include <cstdio>

#include "error.hpp"

namespace m2n2 {

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json fill = {{"connectivity", c.fill.connectivity}};
  fill["depth_weight"] = c.fill.depth_weight ? nlohmann::json(*c.fill.depth_weight) : nlohmann::json("auto");
  return {
      {"temperature", c.temperature},
      {"ipf_tol", c.ipf_tol},
      {"ipf_max_iter", c.ipf_max_iter},
      {"markov", {{"tau", c.markov.tau}, {"t_max", c.markov.t_max}}},
      {"jbu",
       {{"sigma_spatial", c.jbu.sigma_spatial},
        {"sigma_range", c.jbu.sigma_range},
        {"radius", c.jbu.radius},
        {"progressive", c.jbu.progressive},
        {"depth_channel", c.jbu_depth}}},
      {"fill", fill},
      {"adaptive",
       {{"sigma_adaptive", c.adaptive.sigma_adaptive},
        {"sigma_prior", c.adaptive.sigma_prior},
        {"r_min", c.adaptive.r_min},
        {"use_adaptive", c.adaptive.use_adaptive}}},
  };
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.temperature = j.value("temperature", c.temperature);
    c.ipf_tol = j.value("ipf_tol", c.ipf_tol);
    c.ipf_max_iter = j.value("ipf_max_iter", c.ipf_max_iter);
    if (j.contains("markov")) {
      const auto& m = j["markov"];
      c.markov.tau = m.value("tau", c.markov.tau);
      c.markov.t_max = m.value("t_max", c.markov.t_max);
    }
    if (j.contains("jbu")) {
      const auto& b = j["jbu"];
      c.jbu.sigma_spatial = b.value("sigma_spatial", c.jbu.sigma_spatial);
      c.jbu.sigma_range = b.value("sigma_range", c.jbu.sigma_range);
      c.jbu.radius = b.value("radius", c.jbu.radius);
      c.jbu.progressive = b.value("progressive", c.jbu.progressive);
      c.jbu_depth = b.value("depth_channel", c.jbu_depth);
    }
    if (j.contains("fill")) {
      const auto& f = j["fill"];
      c.fill.connectivity = f.value("connectivity", c.fill.connectivity);
      if (f.contains("depth_weight") && f["depth_weight"].is_number()) c.fill.depth_weight = f["depth_weight"].get<double>();
    }
    if (j.contains("adaptive")) {
      const auto& a = j["adaptive"];
      c.adaptive.sigma_adaptive = a.value("sigma_adaptive", c.adaptive.sigma_adaptive);
      c.adaptive.sigma_prior = a.value("sigma_prior", c.adaptive.sigma_prior);
      c.adaptive.r_min = a.value("r_min", c.adaptive.r_min);
      c.adaptive.use_adaptive = a.value("use_adaptive", c.adaptive.use_adaptive);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  if (!(c.adaptive.sigma_adaptive > 0.0) || !(c.adaptive.r_min >= 1.0))
    fail(ErrorCode::InvalidArgument, "config: sigma_adaptive must be > 0 and r_min >= 1");
  return c;
}

std::string fingerprint(const nlohmann::json& j) {
  const std::string text = j.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace m2n2
