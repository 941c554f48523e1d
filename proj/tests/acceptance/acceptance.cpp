// Acceptance suite: one PASS/FAIL line per criterion.
//   m2n2_acceptance                 run everything
//   m2n2_acceptance --criterion N   run one criterion

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "evaluator.hpp"
#include "oracles.hpp"
#include "synth.hpp"
#include "temp_dir.hpp"

using namespace m2n2;

namespace {

using Seconds = std::chrono::duration<double>;
using SteadyClock = std::chrono::steady_clock;

constexpr int kSuiteSize = 50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  std::string out(static_cast<std::size_t>(std::snprintf(nullptr, 0, f, args...)), '\0');
  std::snprintf(out.data(), out.size() + 1, f, args...);
  return out;
}

// Suites are written once per process and benchmark reports are memoised.
class Fixtures {
 public:
  const std::filesystem::path& suite(const std::string& kind) {
    auto it = suites_.find(kind);
    if (it == suites_.end()) {
      const auto dir = root_ / kind;
      write_suite(dir, kind, kSuiteSize, 0);
      it = suites_.emplace(kind, dir).first;
    }
    return it->second;
  }

  const BenchReport& report(const std::string& kind, ClickStrategy strategy, bool adaptive, bool depth_fill) {
    const std::string key = fmt("%s/%d/%d/%d", kind.c_str(), static_cast<int>(strategy), adaptive, depth_fill);
    auto it = reports_.find(key);
    if (it == reports_.end()) {
      const auto t0 = SteadyClock::now();
      BenchReport r = run_benchmark(suite(kind), options(strategy, adaptive, depth_fill));
      seconds_[key] = Seconds(SteadyClock::now() - t0).count();
      it = reports_.emplace(key, std::move(r)).first;
    }
    return it->second;
  }

  double seconds(const std::string& kind, ClickStrategy strategy, bool adaptive, bool depth_fill) {
    report(kind, strategy, adaptive, depth_fill);
    return seconds_[fmt("%s/%d/%d/%d", kind.c_str(), static_cast<int>(strategy), adaptive, depth_fill)];
  }

  static BenchmarkOptions options(ClickStrategy strategy, bool adaptive, bool depth_fill) {
    BenchmarkOptions o;
    o.simulate.strategy = strategy;
    o.pipeline.adaptive.use_adaptive = adaptive;
    if (!depth_fill) o.pipeline.fill.depth_weight = 0.0;
    return o;
  }

 private:
  m2n2::testing::TempDir root_{"m2n2_acceptance"};
  std::map<std::string, std::filesystem::path> suites_;
  std::map<std::string, BenchReport> reports_;
  std::map<std::string, double> seconds_;
};

Outcome oracle_equivalence(Fixtures&) {
  const auto t0 = SteadyClock::now();
  std::mt19937_64 rng(20240611);
  int markov_bad = 0, fill_bad = 0, jbu_bad = 0, select_bad = 0;
  double jbu_worst = 0.0;

  for (int i = 0; i < 20; ++i) {
    const AttentionTensor a = oracle::random_doubly_stochastic(Dims{8, 8}, rng, 1.5);
    const std::size_t seed = rng() % a.states();
    if (markov_map(a, seed, MarkovParams{}).values != oracle::markov_by_matrix_power(a, seed, 0.4, 64)) ++markov_bad;
  }

  std::uniform_real_distribution<float> uf(0.0f, 1.0f);
  for (int i = 0; i < 20; ++i) {
    const Dims d{16, 16};
    const RealMap m = oracle::random_field(d, rng, 30.0, i % 2 == 0);
    Grid<float> depth(d);
    for (auto& v : depth.storage()) v = uf(rng);
    const Pixel seed{static_cast<int>(rng() % 16), static_cast<int>(rng() % 16)};
    FillParams params;
    const RealMap fast = geodesic_fill(m, depth, seed, params);
    if (fast != oracle::dijkstra(m, depth, seed, resolve_depth_weight(m, params), params.connectivity)) ++fill_bad;
  }

  for (int i = 0; i < 10; ++i) {
    const RealMap src = oracle::random_field(Dims{4, 4}, rng, 20.0);
    GuideImage guide(Dims{16, 16}, 4);
    const int split = 4 + static_cast<int>(rng() % 8);
    float left[4], right[4];
    for (int c = 0; c < 4; ++c) left[c] = uf(rng), right[c] = uf(rng);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        for (int c = 0; c < 4; ++c) guide(y, x, c) = (x + y / 3 < split ? left[c] : right[c]) + 0.05f * uf(rng);
    const auto fast = jbu_upsample(src, guide, JbuParams{});
    const auto slow = oracle::jbu_direct(src, guide, JbuParams{});
    double worst = 0.0;
    for (std::size_t q = 0; q < slow.size(); ++q) worst = std::max(worst, std::abs(fast.map[q] - slow[q]));
    jbu_worst = std::max(jbu_worst, worst);
    if (!(worst <= 1e-5)) ++jbu_bad;
  }

  for (int i = 0; i < 10; ++i) {
    const Dims d{12, 12};
    std::uniform_int_distribution<int> pos(0, 11);
    const RealMap m = oracle::random_field(d, rng, 15.0, i % 2 == 0);
    const RealMap o1 = oracle::random_field(d, rng, 15.0), o2 = oracle::random_field(d, rng, 15.0);
    const std::vector<PromptPoint> others{{pos(rng), pos(rng), 1}, {pos(rng), pos(rng), static_cast<int>(rng() % 2)}};
    const std::vector<ScaledMap> maps{{&o1, 5.0, others[0].label, 0}, {&o2, 6.0, others[1].label, 1}};
    const Segmentation prev = fuse(maps);
    ScoringInputs in;
    in.markov = &m;
    in.point = PromptPoint{pos(rng), pos(rng), static_cast<int>(rng() % 2)};
    in.index = 2;
    in.others = others;
    in.prev = &prev;
    in.other_maps = maps;
    in.cfg.sigma_adaptive = 1.0 + i % 3;
    const auto candidates = candidate_lambdas(m, in.cfg.sigma_prior);
    const auto fast = select_scale(in);
    const auto slow = oracle::exhaustive_select(m, in.point, 2, others, prev, maps, in.cfg, candidates);
    if (fast.lambda != slow.lambda || fast.fallback_used != slow.fallback) ++select_bad;
  }

  const double secs = Seconds(SteadyClock::now() - t0).count();
  const bool pass = markov_bad == 0 && fill_bad == 0 && jbu_bad == 0 && select_bad == 0 && secs < 60.0;
  return {pass, fmt("markov mismatches=%d/20, fill mismatches=%d/20, jbu max err %.2e (%d/10 over), "
                    "select mismatches=%d/10, %.2fs",
                    markov_bad, fill_bad, jbu_worst, jbu_bad, select_bad, secs)};
}

Outcome ipf_tolerance(Fixtures&) {
  std::mt19937_64 rng(777);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 50; ++i) {
    AttentionTensor a;
    a.coarse = Dims{4 + i % 5, 6 + i % 4};
    a.mat.resize(a.states() * a.states());
    for (auto& v : a.mat) v = std::exp(g(rng));
    try {
      const IpfResult r = ipf_normalize(apply_temperature(a, 1.0));
      const double dev = std::max(max_row_deviation(r.tensor), max_col_deviation(r.tensor));
      worst = std::max(worst, dev);
      if (!(dev <= 1e-4)) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  return {failures == 0, fmt("%d/50 outside tolerance, worst deviation %.2e", failures, worst)};
}

Outcome fusion_truncation(Fixtures&) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> lam(0.5, 12.0);
  std::size_t pixels = 0, violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Dims d{24, 24};
    const int k = 1 + trial % 5;
    std::vector<RealMap> fields;
    for (int i = 0; i < k; ++i) fields.push_back(oracle::random_field(d, rng, 10.0, trial % 2 == 0));
    std::vector<ScaledMap> maps;
    for (int i = 0; i < k; ++i) maps.push_back(ScaledMap{&fields[i], lam(rng), static_cast<int>(rng() % 2), i});
    const Segmentation seg = fuse(maps);
    for (std::size_t q = 0; q < d.size(); ++q, ++pixels) {
      double best = std::numeric_limits<double>::infinity();
      int label = 0;
      for (const auto& m : maps)
        if (m.scaled(q) < best) best = m.scaled(q), label = m.label;
      const bool expected = best <= 1.0 && label == 1;
      if (seg.at(q) != expected) ++violations;
    }
  }
  return {violations == 0, fmt("%zu violations over %zu pixels", violations, pixels)};
}

Outcome adaptive_guard(Fixtures& fx) {
  std::size_t clicks = 0, unguarded = 0, guarded_violations = 0, pass2 = 0, pass2_reduced = 0;
  std::string first;
  for (const char* kind : {"overlap", "mixed"})
    for (ClickStrategy s : {ClickStrategy::Center, ClickStrategy::Random}) {
      const BenchReport& r = fx.report(kind, s, true, true);
      for (const auto& t : r.trajectories)
        for (std::size_t k = 0; k < t.diagnostics.size(); ++k) {
          const auto& d = t.diagnostics[k];
          ++clicks;
          if (d.pass2_triggered) {
            ++pass2;
            pass2_reduced += d.area_delta < d.pass1_area_delta ? 1 : 0;
          }
          if (d.fallback_used) continue;
          ++unguarded;
          if (!(d.area_delta < d.limit)) {
            ++guarded_violations;
            first += fmt("; %s %s click %zu: pass1 %.0f, delta %.0f, L %.1f", strategy_name(s),
                         t.instance_id.c_str(), k + 1, d.pass1_area_delta, d.area_delta, d.limit);
          }
        }
    }

  // Engineered case: the background click would flip a whole object in the first pass.
  const auto scene = generate_scene(overlap_same_class_spec(3));
  auto prepared = prepare_bundle(std::make_shared<ImageBundle>(scene.bundle), PipelineConfig{});
  Session session(prepared);
  session.add_prompt(PromptPoint{48, 74, 1});
  const ClickResult r = session.add_prompt(PromptPoint{101, 29, 0});
  const bool engineered = r.pass2_triggered && r.area_delta < r.pass1_area_delta;

  const bool pass = guarded_violations == 0 && engineered;
  return {pass, fmt("%zu/%zu non-fallback clicks with delta >= L (of %zu clicks); pass 2 ran %zu times, reduced delta "
                    "%zu; engineered case %s (pass1 %.0f -> %.0f, L=%.1f)%s",
                    guarded_violations, unguarded, clicks, pass2, pass2_reduced, engineered ? "reduced" : "NOT reduced",
                    r.pass1_area_delta, r.area_delta, r.limit, first.c_str())};
}

Outcome depth_ablation(Fixtures& fx) {
  const BenchReport& with = fx.report("overlap", ClickStrategy::Center, true, true);
  const BenchReport& without = fx.report("overlap", ClickStrategy::Center, true, false);
  const double secs = fx.seconds("overlap", ClickStrategy::Center, true, true) +
                      fx.seconds("overlap", ClickStrategy::Center, true, false);
  const double gain = with.miou_at.at(1) - without.miou_at.at(1);
  const bool pass = gain >= 0.15 && with.noc90 < without.noc90 && secs < 300.0;
  return {pass, fmt("mIoU@1 %.4f vs %.4f (gain %.4f), NoC90 %.2f vs %.2f, %.1fs", with.miou_at.at(1),
                    without.miou_at.at(1), gain, with.noc90, without.noc90, secs)};
}

Outcome adaptive_dominance(Fixtures& fx) {
  bool pass = true;
  std::string detail;
  for (ClickStrategy s : {ClickStrategy::Center, ClickStrategy::Random}) {
    const BenchReport& adaptive = fx.report("mixed", s, true, true);
    const BenchReport& prior = fx.report("mixed", s, false, true);
    std::string losses;
    for (int n = 1; n <= kDefaultMaxClicks; ++n) {
      const double a = adaptive.miou_at.at(n), p = prior.miou_at.at(n);
      if (a < p) losses += fmt(" @%d %.4f<%.4f", n, a, p);
    }
    pass = pass && losses.empty();
    detail += fmt("%s: NoC90 %.2f vs %.2f, %s; ", strategy_name(s), adaptive.noc90, prior.noc90,
                  losses.empty() ? "dominates" : ("below prior" + losses).c_str());
  }
  return {pass, detail};
}

Outcome protocol(Fixtures&) {
  bool ok = kDefaultMaxClicks == 20 && AdaptiveConfig{}.sigma_adaptive == 6.0 && kNocThreshold90 == 0.90 &&
            kNocThreshold95 == 0.95 && SimulateOptions{}.max_clicks == 20;
  Trajectory a, b;
  a.ious = {0.5, 0.91, 0.96};
  b.ious = {0.2, 0.4};
  ok = ok && noc(a, kNocThreshold90) == 2 && noc(a, kNocThreshold95) == 3 && noc(b, kNocThreshold90) == 20;
  const std::vector<Trajectory> both{a, b};
  ok = ok && std::abs(miou_at(both, 1) - 0.35) < 1e-12 && std::abs(miou_at(both, 3) - 0.68) < 1e-12 &&
       std::abs(miou_at(both, 20) - 0.68) < 1e-12;
  return {ok, "20 clicks, sigma_adaptive 6, thresholds 0.90/0.95, noc and miou_at hand values"};
}

Outcome determinism(Fixtures& fx) {
  const BenchReport& first = fx.report("mixed", ClickStrategy::Random, true, true);
  const BenchReport again = run_benchmark(fx.suite("mixed"), Fixtures::options(ClickStrategy::Random, true, true));
  const std::string a = report_to_json(first).dump() + report_to_csv(first);
  const std::string b = report_to_json(again).dump() + report_to_csv(again);
  return {a == b, fmt("report of %zu bytes %s on rerun", a.size(), a == b ? "identical" : "DIFFERS")};
}

Outcome performance(Fixtures&) {
  const auto scene = generate_scene(mixed_scene_spec(3, Dims{480, 640}, Dims{48, 64}));
  auto prepared = prepare_bundle(std::make_shared<ImageBundle>(scene.bundle), PipelineConfig{});
  Session session(prepared);
  const PromptPoint clicks[] = {{320, 240, 1}, {100, 100, 0}, {500, 400, 1}, {330, 250, 1}, {20, 460, 0}};
  double worst = 0.0;
  for (const auto& p : clicks) {
    const auto t0 = SteadyClock::now();
    session.add_prompt(p);
    worst = std::max(worst, Seconds(SteadyClock::now() - t0).count());
  }
  return {worst <= 2.0, fmt("slowest of 5 clicks %.3fs on 640x480", worst)};
}

struct Criterion {
  const char* name;
  std::function<Outcome(Fixtures&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"oracle equivalence", oracle_equivalence}, {"ipf tolerance", ipf_tolerance},
      {"fusion truncation", fusion_truncation},   {"adaptive guard", adaptive_guard},
      {"depth ablation", depth_ablation},         {"adaptive vs prior gate", adaptive_dominance},
      {"protocol", protocol},                     {"determinism", determinism},
      {"performance", performance},
  };
  int only = 0;
  if (argc == 3 && std::strcmp(argv[1], "--criterion") == 0) only = std::atoi(argv[2]);
  if (only < 0 || only > static_cast<int>(criteria.size()) || (argc != 1 && only == 0)) {
    std::fprintf(stderr, "usage: %s [--criterion 1..%zu]\n", argv[0], criteria.size());
    return 2;
  }

  Fixtures fixtures;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].run(fixtures);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
