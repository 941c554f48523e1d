#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "mask.hpp"
#include "prompt.hpp"
#include "segmenter.hpp"

namespace m2n2 {

inline constexpr int kDefaultMaxClicks = 20;
inline constexpr double kNocThreshold90 = 0.90;
inline constexpr double kNocThreshold95 = 0.95;

double iou(const Segmentation& pred, const Segmentation& gt);

// Pixel farthest from the complement inside the largest 8-connected error component.
PromptPoint next_click_center(const Segmentation& pred, const Segmentation& gt);

// Uniform over all error pixels; deterministic for a fixed seed.
PromptPoint next_click_random(const Segmentation& pred, const Segmentation& gt, std::uint64_t rng_seed);

enum class ClickStrategy { Center, Random };

ClickStrategy parse_strategy(const std::string& name);
const char* strategy_name(ClickStrategy s);

struct Trajectory {
  std::string instance_id;
  std::vector<double> ious;
  std::vector<PromptPoint> clicks;  // in ground-truth pixel coordinates
  std::vector<ClickResult> diagnostics;
};

struct SimulateOptions {
  ClickStrategy strategy = ClickStrategy::Center;
  int max_clicks = kDefaultMaxClicks;
  std::uint64_t seed = 0;
};

// One fresh session per ground-truth mask. gt may be at the bundle's original
// resolution; IoU is measured there and clicks are mapped back to the image.
Trajectory simulate(std::shared_ptr<const PreparedBundle> prepared, const Segmentation& gt, const SimulateOptions& opts,
                    const std::string& instance_id = {});

int noc(const Trajectory& traj, double threshold, int max_clicks = kDefaultMaxClicks);
double miou_at(const std::vector<Trajectory>& trajs, int n);

struct BenchReport {
  double noc90 = 0.0;
  double noc95 = 0.0;
  std::map<int, double> miou_at;
  std::vector<Trajectory> trajectories;
  std::vector<std::pair<std::string, std::string>> failures;  // instance id, error
  nlohmann::json config;
  std::string config_fingerprint;
  int max_clicks = kDefaultMaxClicks;
  std::string strategy;
};

struct BenchmarkOptions {
  SimulateOptions simulate;
  PipelineConfig pipeline;
  int threads = 1;
};

BenchReport aggregate_report(std::vector<Trajectory> trajs, const BenchmarkOptions& opts);
BenchReport run_benchmark(const std::filesystem::path& dataset_dir, const BenchmarkOptions& opts);

nlohmann::json report_to_json(const BenchReport& report);
std::string report_to_csv(const BenchReport& report);

}  // namespace m2n2
