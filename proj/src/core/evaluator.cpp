#include "evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include "distance_transform.hpp"
#include "error.hpp"

namespace m2n2 {
namespace fs = std::filesystem;
namespace {

std::vector<std::uint8_t> error_pixels(const Segmentation& pred, const Segmentation& gt) {
  if (pred.dims() != gt.dims()) fail(ErrorCode::DimMismatch, "prediction and ground truth dims differ");
  std::vector<std::uint8_t> err(gt.dims().size());
  bool any = false;
  for (std::size_t i = 0; i < err.size(); ++i) {
    err[i] = pred.at(i) != gt.at(i) ? 1 : 0;
    any = any || err[i];
  }
  if (!any) fail(ErrorCode::NoError, "prediction equals ground truth");
  return err;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace

double iou(const Segmentation& pred, const Segmentation& gt) {
  if (pred.dims() != gt.dims()) fail(ErrorCode::DimMismatch, "prediction and ground truth dims differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gt.dims().size(); ++i) {
    const bool a = pred.at(i), b = gt.at(i);
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

PromptPoint next_click_center(const Segmentation& pred, const Segmentation& gt) {
  const auto err = error_pixels(pred, gt);
  const Dims d = gt.dims();

  // Largest 8-connected error component; discovery order is row-major, so ties keep the first.
  std::vector<int> label(err.size(), -1);
  std::vector<std::size_t> stack;
  int best = -1;
  std::size_t best_size = 0;
  int next_label = 0;
  for (std::size_t start = 0; start < err.size(); ++start) {
    if (!err[start] || label[start] >= 0) continue;
    std::size_t size = 0;
    label[start] = next_label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int y = static_cast<int>(i / static_cast<std::size_t>(d.width));
      const int x = static_cast<int>(i % static_cast<std::size_t>(d.width));
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy, nx = x + dx;
          if ((dy == 0 && dx == 0) || !d.contains(ny, nx)) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * static_cast<std::size_t>(d.width) + static_cast<std::size_t>(nx);
          if (err[j] && label[j] < 0) {
            label[j] = next_label;
            stack.push_back(j);
          }
        }
    }
    if (size > best_size) {
      best_size = size;
      best = next_label;
    }
    ++next_label;
  }

  // Distance to the complement, with the region outside the image counted as complement.
  Grid<std::uint8_t> complement(Dims{d.height + 2, d.width + 2}, 1, 1);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x)
      complement(y + 1, x + 1) = label[static_cast<std::size_t>(y) * d.width + x] == best ? 0 : 1;
  const RealMap dist = squared_distance_transform(complement);

  double best_dist = -1.0;
  PromptPoint click;
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      if (label[static_cast<std::size_t>(y) * d.width + x] != best) continue;
      const double v = dist(y + 1, x + 1);
      if (v > best_dist) {
        best_dist = v;
        click = PromptPoint{x, y, gt.at(y, x) ? 1 : 0};
      }
    }
  return click;
}

PromptPoint next_click_random(const Segmentation& pred, const Segmentation& gt, std::uint64_t rng_seed) {
  const auto err = error_pixels(pred, gt);
  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < err.size(); ++i)
    if (err[i]) pixels.push_back(i);
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> pick(0, pixels.size() - 1);
  const std::size_t i = pixels[pick(rng)];
  const int w = gt.dims().width;
  const int y = static_cast<int>(i / static_cast<std::size_t>(w));
  const int x = static_cast<int>(i % static_cast<std::size_t>(w));
  return PromptPoint{x, y, gt.at(i) ? 1 : 0};
}

ClickStrategy parse_strategy(const std::string& name) {
  if (name == "center") return ClickStrategy::Center;
  if (name == "random") return ClickStrategy::Random;
  fail(ErrorCode::InvalidArgument, "unknown strategy '" + name + "' (expected center|random)");
}

const char* strategy_name(ClickStrategy s) { return s == ClickStrategy::Center ? "center" : "random"; }

Trajectory simulate(std::shared_ptr<const PreparedBundle> prepared, const Segmentation& gt, const SimulateOptions& opts,
                    const std::string& instance_id) {
  if (gt.empty()) fail(ErrorCode::InvalidArgument, "ground truth mask is empty");
  if (opts.max_clicks < 1) fail(ErrorCode::InvalidArgument, "max_clicks must be >= 1");
  const Dims image = prepared->dims();
  const Dims gt_dims = gt.dims();
  Session session(std::move(prepared));

  Trajectory traj;
  traj.instance_id = instance_id;
  Segmentation pred(gt_dims);
  const std::uint64_t stream = mix(opts.seed, hash_string(instance_id));
  for (int k = 0; k < opts.max_clicks; ++k) {
    const PromptPoint click = opts.strategy == ClickStrategy::Center
                                  ? next_click_center(pred, gt)
                                  : next_click_random(pred, gt, mix(stream, static_cast<std::uint64_t>(k)));
    const ClickResult& result = session.add_prompt(coordinate_map(click, gt_dims, image));
    pred = resample_nearest(result.mask, gt_dims);
    traj.clicks.push_back(click);
    traj.ious.push_back(iou(pred, gt));
    traj.diagnostics.push_back(result);
    if (traj.ious.back() >= 1.0) break;
  }
  return traj;
}

int noc(const Trajectory& traj, double threshold, int max_clicks) {
  for (std::size_t k = 0; k < traj.ious.size() && static_cast<int>(k) < max_clicks; ++k)
    if (traj.ious[k] >= threshold) return static_cast<int>(k) + 1;
  return max_clicks;
}

double miou_at(const std::vector<Trajectory>& trajs, int n) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be >= 1");
  if (trajs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : trajs) {
    if (t.ious.empty()) continue;
    sum += t.ious[std::min(static_cast<std::size_t>(n), t.ious.size()) - 1];
  }
  return sum / static_cast<double>(trajs.size());
}

BenchReport aggregate_report(std::vector<Trajectory> trajs, const BenchmarkOptions& opts) {
  BenchReport r;
  r.max_clicks = opts.simulate.max_clicks;
  r.strategy = strategy_name(opts.simulate.strategy);
  r.config = to_json(opts.pipeline);
  r.config["max_clicks"] = opts.simulate.max_clicks;
  r.config["strategy"] = r.strategy;
  r.config["seed"] = opts.simulate.seed;
  r.config_fingerprint = fingerprint(r.config);
  if (!trajs.empty()) {
    double s90 = 0.0, s95 = 0.0;
    for (const auto& t : trajs) {
      s90 += noc(t, kNocThreshold90, r.max_clicks);
      s95 += noc(t, kNocThreshold95, r.max_clicks);
    }
    r.noc90 = s90 / static_cast<double>(trajs.size());
    r.noc95 = s95 / static_cast<double>(trajs.size());
    for (int n = 1; n <= r.max_clicks; ++n) r.miou_at[n] = miou_at(trajs, n);
  }
  r.trajectories = std::move(trajs);
  return r;
}

BenchReport run_benchmark(const fs::path& dataset_dir, const BenchmarkOptions& opts) {
  if (!fs::is_directory(dataset_dir)) fail(ErrorCode::MissingFile, dataset_dir.string() + " is not a directory");
  std::vector<fs::path> bundles;
  for (const auto& entry : fs::directory_iterator(dataset_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) bundles.push_back(entry.path());
  std::sort(bundles.begin(), bundles.end());

  struct Outcome {
    std::vector<Trajectory> trajs;
    std::vector<std::pair<std::string, std::string>> failures;
  };
  std::vector<Outcome> outcomes(bundles.size());
  auto run_one = [&](std::size_t b) {
    Outcome& out = outcomes[b];
    const std::string bundle_id = bundles[b].filename().string();
    std::shared_ptr<const PreparedBundle> prepared;
    try {
      auto bundle = std::make_shared<ImageBundle>(load_bundle(bundles[b]));
      prepared = prepare_bundle(bundle, opts.pipeline);
    } catch (const std::exception& e) {
      out.failures.emplace_back(bundle_id, e.what());
      return;
    }
    for (const auto& [mask_id, gt] : prepared->bundle->ground_truth) {
      const std::string id = bundle_id + "/" + mask_id;
      try {
        out.trajs.push_back(simulate(prepared, gt, opts.simulate, id));
      } catch (const std::exception& e) {
        out.failures.emplace_back(id, e.what());
      }
    }
  };

  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(bundles.size())));
  if (threads == 1) {
    for (std::size_t b = 0; b < bundles.size(); ++b) run_one(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < bundles.size(); b = next++) run_one(b);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<Trajectory> trajs;
  std::vector<std::pair<std::string, std::string>> failures;
  for (auto& o : outcomes) {
    for (auto& t : o.trajs) trajs.push_back(std::move(t));
    for (auto& f : o.failures) failures.push_back(std::move(f));
  }
  BenchReport report = aggregate_report(std::move(trajs), opts);
  report.failures = std::move(failures);
  return report;
}

nlohmann::json report_to_json(const BenchReport& r) {
  nlohmann::json miou = nlohmann::json::object();
  for (const auto& [n, v] : r.miou_at) miou[std::to_string(n)] = v;
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& t : r.trajectories) {
    nlohmann::json clicks = nlohmann::json::array();
    for (const auto& c : t.clicks) clicks.push_back({c.x, c.y, c.label});
    nlohmann::json pass2 = nlohmann::json::array(), fallback = nlohmann::json::array();
    for (const auto& d : t.diagnostics) {
      pass2.push_back(d.pass2_triggered);
      fallback.push_back(d.fallback_used);
    }
    instances.push_back({{"id", t.instance_id},
                         {"ious", t.ious},
                         {"clicks", clicks},
                         {"noc90", noc(t, kNocThreshold90, r.max_clicks)},
                         {"noc95", noc(t, kNocThreshold95, r.max_clicks)},
                         {"pass2_triggered", pass2},
                         {"fallback_used", fallback}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& [id, msg] : r.failures) failures.push_back({{"id", id}, {"error", msg}});
  return {{"noc90", r.noc90},
          {"noc95", r.noc95},
          {"miou_at", miou},
          {"instance_count", r.trajectories.size()},
          {"max_clicks", r.max_clicks},
          {"strategy", r.strategy},
          {"iou_resolution", "original"},
          {"protocol", "one session per ground-truth mask"},
          {"config", r.config},
          {"config_fingerprint", r.config_fingerprint},
          {"instances", instances},
          {"failures", failures}};
}

std::string report_to_csv(const BenchReport& r) {
  std::ostringstream out;
  out << "instance_id,clicks,noc90,noc95,final_iou";
  for (int n = 1; n <= r.max_clicks; ++n) out << ",iou@" << n;
  out << "\n";
  char buf[32];
  for (const auto& t : r.trajectories) {
    out << t.instance_id << "," << t.ious.size() << "," << noc(t, kNocThreshold90, r.max_clicks) << ","
        << noc(t, kNocThreshold95, r.max_clicks) << ",";
    std::snprintf(buf, sizeof buf, "%.6f", t.ious.empty() ? 0.0 : t.ious.back());
    out << buf;
    for (int n = 1; n <= r.max_clicks; ++n) {
      const double v = t.ious.empty() ? 0.0 : t.ious[std::min<std::size_t>(static_cast<std::size_t>(n), t.ious.size()) - 1];
      std::snprintf(buf, sizeof buf, "%.6f", v);
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace m2n2
