#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "floodfill.hpp"
#include "jbu.hpp"
#include "markov.hpp"
#include "scoring.hpp"

namespace m2n2 {

struct PipelineConfig {
  double temperature = 1.0;
  double ipf_tol = 1e-4;
  int ipf_max_iter = 50;
  MarkovParams markov;
  JbuParams jbu;
  bool jbu_depth = true;
  FillParams fill;
  AdaptiveConfig adaptive;
};

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);

// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string fingerprint(const nlohmann::json& j);

}  // namespace m2n2
