#include <doctest.h>

#include <random>

#include "error_code.hpp"
#include "evaluator.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "temp_dir.hpp"

using namespace m2n2;
using m2n2::testing::code_of;

namespace {

Trajectory traj_of(std::vector<double> ious) {
  Trajectory t;
  t.ious = std::move(ious);
  return t;
}

Segmentation random_mask(Dims d, std::mt19937_64& rng, double p) {
  std::bernoulli_distribution on(p);
  Segmentation s(d);
  for (std::size_t i = 0; i < d.size(); ++i) s.set(i, on(rng));
  return s;
}

}  // namespace

TEST_CASE("protocol constants") {
  CHECK(kDefaultMaxClicks == 20);
  CHECK(kNocThreshold90 == 0.90);
  CHECK(kNocThreshold95 == 0.95);
  CHECK(AdaptiveConfig{}.sigma_adaptive == 6.0);
  CHECK(SimulateOptions{}.max_clicks == 20);
}

TEST_CASE("noc counts clicks to the threshold") {
  CHECK(noc(traj_of({0.5, 0.89, 0.9, 0.97}), 0.90) == 3);
  CHECK(noc(traj_of({0.5, 0.89, 0.9, 0.97}), 0.95) == 4);
  CHECK(noc(traj_of({0.95}), 0.90) == 1);
  CHECK(noc(traj_of({0.1, 0.2}), 0.90) == 20);
  CHECK(noc(traj_of({0.1, 0.2, 0.91}), 0.90, 2) == 2);
  CHECK(noc(traj_of({}), 0.90) == 20);
}

TEST_CASE("miou at n carries the last value forward") {
  const std::vector<Trajectory> ts{traj_of({0.2, 0.6, 1.0}), traj_of({0.4, 0.8, 0.9, 0.95})};
  CHECK(miou_at(ts, 1) == doctest::Approx(0.3));
  CHECK(miou_at(ts, 2) == doctest::Approx(0.7));
  CHECK(miou_at(ts, 4) == doctest::Approx((1.0 + 0.95) / 2));
  CHECK(miou_at(ts, 20) == doctest::Approx((1.0 + 0.95) / 2));
  CHECK(miou_at({}, 1) == 0.0);
  CHECK(code_of([&] { miou_at(ts, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("iou") {
  Segmentation a(Dims{2, 2}), b(Dims{2, 2});
  CHECK(iou(a, b) == 1.0);
  a.set(0, true);
  a.set(1, true);
  b.set(1, true);
  b.set(2, true);
  CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(code_of([&] { iou(a, Segmentation(Dims{3, 2})); }) == ErrorCode::DimMismatch);
}

TEST_CASE("center click matches the brute-force oracle") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 30; ++trial) {
    const Dims d{9 + trial % 5, 11};
    const Segmentation gt = random_mask(d, rng, 0.4);
    const Segmentation pred = random_mask(d, rng, 0.2);
    if (gt == pred) continue;
    REQUIRE(next_click_center(pred, gt) == oracle::center_click_brute(pred, gt));
  }
}

TEST_CASE("center click lands in the middle of a missed square") {
  Segmentation gt(Dims{20, 20});
  for (int y = 5; y < 12; ++y)
    for (int x = 8; x < 15; ++x) gt.set(y, x, true);
  const auto c = next_click_center(Segmentation(Dims{20, 20}), gt);
  CHECK(c == PromptPoint{11, 8, 1});
  CHECK(code_of([&] { next_click_center(gt, gt); }) == ErrorCode::NoError);
}

TEST_CASE("random click is an error pixel and reproducible") {
  std::mt19937_64 rng(92);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims d{16, 16};
    const Segmentation gt = random_mask(d, rng, 0.3);
    const Segmentation pred = random_mask(d, rng, 0.3);
    const auto c = next_click_random(pred, gt, 1000 + trial);
    CHECK(pred.at(c.y, c.x) != gt.at(c.y, c.x));
    CHECK(c.label == (gt.at(c.y, c.x) ? 1 : 0));
    CHECK(next_click_random(pred, gt, 1000 + trial) == c);
  }
  CHECK(parse_strategy("center") == ClickStrategy::Center);
  CHECK(parse_strategy("random") == ClickStrategy::Random);
  CHECK(code_of([] { parse_strategy("greedy"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("simulation stops at a perfect mask and maps clicks across resolutions") {
  const auto scene = generate_scene(mixed_scene_spec(12));
  auto prepared = prepare_bundle(std::make_shared<ImageBundle>(scene.bundle), PipelineConfig{});
  const Segmentation& gt = scene.bundle.ground_truth.begin()->second;
  const auto t = simulate(prepared, gt, SimulateOptions{}, "x");
  CHECK(t.ious.size() == t.clicks.size());
  CHECK(t.ious.size() <= 20);
  if (t.ious.size() < 20) CHECK(t.ious.back() == 1.0);

  const Segmentation big = resample_nearest(gt, Dims{256, 256});
  const auto t2 = simulate(prepared, big, SimulateOptions{ClickStrategy::Center, 3, 0}, "y");
  CHECK(t2.ious.size() <= 3);
  for (const auto& c : t2.clicks) CHECK(Dims{256, 256}.contains(c.y, c.x));
  CHECK(code_of([&] { simulate(prepared, Segmentation(Dims{128, 128}), SimulateOptions{}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("benchmark reports are reproducible") {
  testing::TempDir dir;
  write_suite(dir.path(), "mixed", 3, 77);
  BenchmarkOptions opts;
  opts.simulate.strategy = ClickStrategy::Random;
  opts.simulate.max_clicks = 5;
  const auto a = report_to_json(run_benchmark(dir.path(), opts));
  opts.threads = 3;
  const auto b = report_to_json(run_benchmark(dir.path(), opts));
  CHECK(a.dump() == b.dump());
  CHECK(a["max_clicks"] == 5);
  CHECK(a["miou_at"].size() == 5);
  CHECK(a["failures"].empty());
  const BenchReport r = run_benchmark(dir.path(), opts);
  const std::string csv = report_to_csv(r);
  CHECK(csv.rfind("instance_id,clicks,noc90,noc95,final_iou,iou@1", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.trajectories.size() + 1));
  CHECK(code_of([&] { run_benchmark(dir / "missing", opts); }) == ErrorCode::MissingFile);
}

TEST_CASE("synthetic scenes are deterministic and well formed") {
  const auto a = generate_scene(mixed_scene_spec(21));
  const auto b = generate_scene(mixed_scene_spec(21));
  CHECK(a.bundle.image == b.bundle.image);
  CHECK(a.bundle.attention.mat == b.bundle.attention.mat);
  CHECK(max_row_deviation(a.bundle.attention) <= 1e-6);
  CHECK(generate_scene(mixed_scene_spec(22)).bundle.image != a.bundle.image);

  // visible object masks are pairwise disjoint
  for (std::size_t i = 0; i < a.ground_truth.size(); ++i)
    for (std::size_t j = i + 1; j < a.ground_truth.size(); ++j)
      for (std::size_t q = 0; q < a.ground_truth[i].dims().size(); ++q)
        REQUIRE_FALSE((a.ground_truth[i].at(q) && a.ground_truth[j].at(q)));
}

TEST_CASE("overlap scenes put both objects in one attention block") {
  const auto s = generate_scene(overlap_same_class_spec(4));
  REQUIRE(s.ground_truth.size() == 2);
  const auto& g = s.coarse_groups;
  const auto& a = s.bundle.attention;
  double within = 0, across = 0;
  int nw = 0, na = 0;
  for (std::size_t r = 0; r < a.states(); ++r)
    for (std::size_t c = 0; c < a.states(); ++c) {
      if (g[r] == 0) continue;
      if (g[c] == g[r]) {
        within += a.at(r, c);
        ++nw;
      } else {
        across += a.at(r, c);
        ++na;
      }
    }
  REQUIRE(nw > 0);
  REQUIRE(na > 0);
  CHECK(within / nw > 5 * across / na);
  SceneSpec bad = overlap_same_class_spec(4);
  bad.objects[1].distance = bad.objects[0].distance;
  CHECK(code_of([&] { generate_scene(bad); }) == ErrorCode::SpecInvalid);
}
