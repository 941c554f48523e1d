#include "segmenter.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "floodfill.hpp"
#include "markov.hpp"

namespace m2n2 {

std::shared_ptr<const PreparedBundle> prepare_bundle(std::shared_ptr<const ImageBundle> bundle,
                                                     const PipelineConfig& config) {
  auto prepared = std::make_shared<PreparedBundle>();
  prepared->config = config;
  AttentionTensor raw = bundle->attention_flipped ? flip_average(bundle->attention, *bundle->attention_flipped)
                                                  : bundle->attention;
  auto ipf = ipf_normalize(apply_temperature(raw, config.temperature), config.ipf_tol, config.ipf_max_iter);
  prepared->op = std::move(ipf.tensor);
  prepared->ipf_iterations = ipf.iterations;
  prepared->guide = make_guide(bundle->image, bundle->depth, config.jbu_depth);
  prepared->bundle = std::move(bundle);
  return prepared;
}

std::size_t coarse_seed(Dims full, Dims coarse, int x, int y) {
  const auto cell = [](int v, int n_full, int n_coarse) {
    return std::min(n_coarse - 1, static_cast<int>((v + 0.5) * n_coarse / n_full));
  };
  return static_cast<std::size_t>(cell(y, full.height, coarse.height)) * static_cast<std::size_t>(coarse.width) +
         static_cast<std::size_t>(cell(x, full.width, coarse.width));
}

PointMap compute_point_map(const PreparedBundle& prepared, int x, int y) {
  const Dims dims = prepared.dims();
  if (!dims.contains(y, x)) fail(ErrorCode::OutOfBounds, "prompt outside the image");
  const auto& cfg = prepared.config;
  const auto coarse = markov_map(prepared.op, coarse_seed(dims, prepared.op.coarse, x, y), cfg.markov);
  const auto up = jbu_upsample(coarse.values, prepared.guide, cfg.jbu);
  PointMap out;
  out.filled = geodesic_fill(up.map, prepared.bundle->depth, Pixel{y, x}, cfg.fill);
  out.level = build_level_index(out.filled);
  return out;
}

PromptPoint coordinate_map(const PromptPoint& p, Dims from, Dims to) {
  if (from.height < 1 || from.width < 1 || to.height < 1 || to.width < 1)
    fail(ErrorCode::InvalidArgument, "dims must be positive");
  if (from == to) return p;
  const auto map = [](int v, int n_from, int n_to) {
    return std::clamp(static_cast<int>(std::floor((v + 0.5) * n_to / n_from)), 0, n_to - 1);
  };
  return PromptPoint{map(p.x, from.width, to.width), map(p.y, from.height, to.height), p.label};
}

Session::Session(std::shared_ptr<const PreparedBundle> prepared)
    : prepared_(std::move(prepared)), current_(prepared_->dims()) {}

const PointMap& Session::point_map(int x, int y) {
  auto& slot = cache_[{x, y}];
  if (!slot) slot = std::make_unique<PointMap>(compute_point_map(*prepared_, x, y));
  return *slot;
}

ScaleSelection Session::select(int click, int pass, int i, const std::vector<int>& prompt_set,
                               const Segmentation& prev, std::span<const ScaledMap> others, const FusionBase& base) {
  std::vector<PromptPoint> x_set;
  x_set.reserve(prompt_set.size());
  for (int j : prompt_set) x_set.push_back(points_[static_cast<std::size_t>(j)]);

  ScoringInputs in;
  in.markov = &maps_[static_cast<std::size_t>(i)]->filled;
  in.level = &maps_[static_cast<std::size_t>(i)]->level;
  in.point = points_[static_cast<std::size_t>(i)];
  in.index = i;
  in.others = x_set;
  in.prev = &prev;
  in.other_maps = others;
  in.other_base = &base;
  in.cfg = prepared_->config.adaptive;

  ScaleSelection sel;
  try {
    sel = select_scale(in);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCandidates) throw;
    // Only the zero-valued pixels (the seed plateau) can be claimed.
    sel.lambda = kLambdaOffset;
    sel.fallback_used = true;
  }
  if (tracing_) {
    ScoreTrace t{click, pass, i, prompt_set, sel.lambda, sel.fallback_used, {}};
    if (!sel.breakdowns.empty()) t.chosen = sel.breakdowns[sel.candidate];
    trace_.push_back(std::move(t));
  }
  return sel;
}

const ClickResult& Session::add_prompt(const PromptPoint& p) {
  const Dims dims = prepared_->dims();
  if (!dims.contains(p.y, p.x)) fail(ErrorCode::OutOfBounds, "prompt outside the image");
  if (p.label != 0 && p.label != 1) fail(ErrorCode::InvalidArgument, "label must be 0 or 1");

  const PointMap& new_map = point_map(p.x, p.y);
  const int newest = static_cast<int>(points_.size());
  const int n = newest + 1;
  const int click = n;
  points_.push_back(p);
  maps_.push_back(&new_map);

  try {
    const Segmentation& prev = current_;  // Y_{N-1}; equals the fusion of the committed scales
    std::vector<ScaledMap> committed;
    for (int j = 0; j < newest; ++j)
      committed.push_back(ScaledMap{&maps_[j]->filled, scales_[j], points_[j].label, j});

    std::vector<int> all_but_newest(static_cast<std::size_t>(newest));
    for (int j = 0; j < newest; ++j) all_but_newest[static_cast<std::size_t>(j)] = j;

    // Newest point against the committed state.
    const FusionBase committed_base = build_fusion_base(committed, dims);
    const ScaleSelection newest_sel = select(click, 1, newest, all_but_newest, prev, committed, committed_base);

    std::vector<double> scales = scales_;
    scales.push_back(newest_sel.lambda);

    // Re-selects every earlier point. Each point's size change is measured like
    // the newest one's: against Y_{N-1}, with the other earlier points held at
    // their committed scales. X includes the newest point unless it is discarded.
    auto reselect_old = [&](int pass, bool discard_newest, bool& any_fallback) {
      std::vector<double> out(scales.begin(), scales.end());
      for (int i = 0; i < newest; ++i) {
        std::vector<ScaledMap> others;
        std::vector<int> prompt_set;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          if (j != newest) others.push_back(committed[static_cast<std::size_t>(j)]);
          if (!(discard_newest && j == newest)) prompt_set.push_back(j);
        }
        const FusionBase base = build_fusion_base(others, dims);
        const auto sel = select(click, pass, i, prompt_set, prev, others, base);
        out[static_cast<std::size_t>(i)] = sel.lambda;
        any_fallback = any_fallback || sel.fallback_used;
      }
      return out;
    };
    auto fuse_all = [&](const std::vector<double>& s) {
      std::vector<ScaledMap> all;
      for (int j = 0; j < n; ++j) all.push_back(ScaledMap{&maps_[j]->filled, s[static_cast<std::size_t>(j)], points_[j].label, j});
      return fuse(all);
    };
    auto delta_of = [&](const Segmentation& seg) {
      return std::abs(static_cast<double>(seg.area()) - static_cast<double>(prev.area()));
    };

    ClickResult result;
    result.newest_fallback = newest_sel.fallback_used;
    result.newest_lambda = newest_sel.lambda;
    if (!newest_sel.breakdowns.empty()) result.newest_breakdown = newest_sel.breakdowns[newest_sel.candidate];
    const auto& adaptive = prepared_->config.adaptive;
    result.limit = size_limit(boundary_distance(p, prev), adaptive);

    bool pass1_fallback = false;
    std::vector<double> pass1 = reselect_old(1, false, pass1_fallback);
    Segmentation seg = fuse_all(pass1);
    result.pass1_area_delta = delta_of(seg);
    std::vector<double> final_scales = std::move(pass1);
    bool old_fallback = pass1_fallback;

    if (adaptive.use_adaptive && newest > 0 && !(result.pass1_area_delta < result.limit)) {
      result.pass2_triggered = true;
      bool pass2_fallback = false;
      final_scales = reselect_old(2, true, pass2_fallback);
      seg = fuse_all(final_scales);
      old_fallback = pass2_fallback;
    }

    result.area_delta = delta_of(seg);
    result.fallback_used = newest_sel.fallback_used || old_fallback;
    result.constraint_residual = adaptive.use_adaptive && !(result.area_delta < result.limit) && !result.fallback_used;
    result.mask = seg;

    history_.push_back(Snapshot{current_, scales_});
    scales_ = std::move(final_scales);
    current_ = std::move(seg);
    clicks_.push_back(std::move(result));
    return clicks_.back();
  } catch (...) {
    points_.pop_back();
    maps_.pop_back();
    throw;
  }
}

const Segmentation& Session::undo() {
  if (history_.empty()) fail(ErrorCode::EmptyHistory, "nothing to undo");
  current_ = std::move(history_.back().mask);
  scales_ = std::move(history_.back().scales);
  history_.pop_back();
  points_.pop_back();
  maps_.pop_back();
  clicks_.pop_back();
  return current_;
}

}  // namespace m2n2
