#include "scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "distance_transform.hpp"
#include "error.hpp"

namespace m2n2 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Foreground area of the fusion for each candidate, given the other prompts fixed.
std::vector<std::size_t> fused_areas(std::span<const double> candidates, const ScoringInputs& in, const FusionBase& base) {
  const RealMap& m = *in.markov;
  const std::size_t k_count = candidates.size();
  const bool foreground = in.point.label == 1;
  std::vector<std::size_t> flips(k_count, 0);

  for (std::size_t q = 0; q < m.size(); ++q) {
    if (static_cast<bool>(base.foreground[q]) == foreground) continue;
    const double mq = m[q];
    auto flips_at = [&](std::size_t k) {
      const double s = mq / candidates[k];
      const bool wins = base.beaten_by(q, s, in.index);
      return foreground ? (wins && s <= 1.0) : wins;
    };
    if (!flips_at(k_count - 1)) continue;
    std::size_t lo = 0, hi = k_count - 1;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (flips_at(mid))
        hi = mid;
      else
        lo = mid + 1;
    }
    ++flips[lo];
  }

  std::vector<std::size_t> areas(k_count);
  std::size_t changed = 0;
  for (std::size_t k = 0; k < k_count; ++k) {
    changed += flips[k];
    areas[k] = foreground ? base.area + changed : base.area - changed;
  }
  return areas;
}

}  // namespace

std::size_t LevelIndex::count_at_most(double v) const {
  return static_cast<std::size_t>(std::upper_bound(sorted_values.begin(), sorted_values.end(), v) - sorted_values.begin());
}

RealMap gradient_magnitude(const RealMap& m) {
  const int h = m.height();
  const int w = m.width();
  RealMap g(m.dims());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      if (w > 1) {
        const int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
        gx = (m(y, x1) - m(y, x0)) / (x1 - x0);
      }
      if (h > 1) {
        const int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
        gy = (m(y1, x) - m(y0, x)) / (y1 - y0);
      }
      g(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return g;
}

LevelIndex build_level_index(const RealMap& m) {
  const RealMap grad = gradient_magnitude(m);
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m[a] < m[b]; });
  LevelIndex index;
  index.sorted_values.reserve(order.size());
  index.gradient_prefix.assign(order.size() + 1, 0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    index.sorted_values.push_back(m[order[i]]);
    index.gradient_prefix[i + 1] = index.gradient_prefix[i] + grad[order[i]];
  }
  return index;
}

double boundary_distance(const PromptPoint& point, const Segmentation& prev) {
  const Dims d = prev.dims();
  if (!d.contains(point.y, point.x)) fail(ErrorCode::OutOfBounds, "point outside the segmentation");
  const bool want = point.label == 1;
  if (prev.at(point.y, point.x) == want) return 0.0;
  if ((want && prev.area() == 0) || (!want && prev.area() == d.size())) return kInf;
  Grid<std::uint8_t> same(d, 1, 0);
  for (std::size_t i = 0; i < same.size(); ++i) same[i] = prev.at(i) == want ? 1 : 0;
  return std::sqrt(squared_distance_transform(same)(point.y, point.x));
}

double size_limit(double r, const AdaptiveConfig& cfg) {
  if (std::isinf(r)) return kInf;
  const double radius = cfg.sigma_adaptive * std::max(r, cfg.r_min);
  return std::numbers::pi * radius * radius;
}

std::vector<double> candidate_lambdas(const RealMap& markov, double sigma_prior, const LevelIndex* level) {
  if (!(sigma_prior > 0.0 && sigma_prior <= 1.0)) fail(ErrorCode::InvalidArgument, "sigma_prior must lie in (0, 1]");
  LevelIndex local;
  if (level == nullptr) {
    local = build_level_index(markov);
    level = &local;
  }
  const auto& values = level->sorted_values;
  const double area_cap = sigma_prior * static_cast<double>(markov.size());
  std::vector<double> all;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v > 0.0) || (i > 0 && values[i - 1] == v)) continue;
    const double lambda = v + kLambdaOffset;
    if (!(static_cast<double>(level->count_at_most(lambda)) < area_cap)) break;
    if (!all.empty() && all.back() >= lambda) continue;
    all.push_back(lambda);
  }
  if (all.empty()) {
    if (values.empty() || !(values.back() > 0.0)) fail(ErrorCode::NoCandidates, "Markov map has no positive values");
    fail(ErrorCode::NoCandidates, "every level set exceeds the prior area");
  }
  if (all.size() <= kMaxCandidates) return all;
  std::vector<double> capped(kMaxCandidates);
  const double step = static_cast<double>(all.size() - 1) / static_cast<double>(kMaxCandidates - 1);
  for (std::size_t k = 0; k < kMaxCandidates; ++k)
    capped[k] = all[static_cast<std::size_t>(std::llround(static_cast<double>(k) * step))];
  return capped;
}

std::vector<ScoreBreakdown> score_candidates(std::span<const double> candidates, const ScoringInputs& in) {
  if (in.markov == nullptr || in.prev == nullptr) fail(ErrorCode::InvalidArgument, "scoring inputs incomplete");
  if (candidates.empty()) fail(ErrorCode::NoCandidates, "empty candidate list");
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!(candidates[k] > 0.0)) fail(ErrorCode::InvalidArgument, "lambda must be > 0");
    if (k > 0 && !(candidates[k] > candidates[k - 1]))
      fail(ErrorCode::InvalidArgument, "candidates must be strictly increasing");
  }
  const RealMap& m = *in.markov;
  if (in.prev->dims() != m.dims()) fail(ErrorCode::DimMismatch, "previous segmentation dims differ from the map");
  LevelIndex local;
  const LevelIndex* level = in.level;
  if (level == nullptr) {
    local = build_level_index(m);
    level = &local;
  }

  const std::size_t k_count = candidates.size();
  std::vector<ScoreBreakdown> out(k_count);

  // Edge score: mean gradient magnitude over the band of values belonging to each candidate.
  std::vector<double> band_mean(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    double below, above;
    if (k_count == 1) {
      below = above = 0.5;
    } else {
      below = (k > 0 ? candidates[k] - candidates[k - 1] : candidates[1] - candidates[0]) / 2.0;
      above = (k + 1 < k_count ? candidates[k + 1] - candidates[k] : candidates[k] - candidates[k - 1]) / 2.0;
    }
    const std::size_t lo = level->count_at_most(candidates[k] - below);
    const std::size_t hi = level->count_at_most(candidates[k] + above);
    if (hi > lo) band_mean[k] = (level->gradient_prefix[hi] - level->gradient_prefix[lo]) / static_cast<double>(hi - lo);
  }
  const double peak = *std::max_element(band_mean.begin(), band_mean.end());

  // Point memberships.
  std::size_t same_total = 0;
  for (const auto& p : in.others) {
    if (!m.dims().contains(p.y, p.x)) fail(ErrorCode::OutOfBounds, "prompt outside the map");
    if (p.label == in.point.label) ++same_total;
  }

  // Size gate inputs.
  FusionBase local_base;
  if (in.other_base == nullptr) local_base = build_fusion_base(in.other_maps, m.dims());
  const FusionBase& base = in.other_base != nullptr ? *in.other_base : local_base;
  if (base.dims != m.dims()) fail(ErrorCode::DimMismatch, "fusion base dims differ from the map");
  const auto areas = fused_areas(candidates, in, base);
  const double limit = in.cfg.use_adaptive ? size_limit(boundary_distance(in.point, *in.prev), in.cfg) : kInf;
  const double prior_cap = in.cfg.sigma_prior * static_cast<double>(m.size());
  const auto& sorted = level->sorted_values;

  for (std::size_t k = 0; k < k_count; ++k) {
    const double lambda = candidates[k];
    ScoreBreakdown& s = out[k];
    s.lambda = lambda;
    s.s_edge = peak > 0.0 ? band_mean[k] / peak : 1.0;

    std::size_t covered = 0;
    bool hits_opposite = false;
    for (const auto& p : in.others) {
      const bool inside = m(p.y, p.x) <= lambda;
      if (p.label == in.point.label)
        covered += inside ? 1 : 0;
      else
        hits_opposite = hits_opposite || inside;
    }
    s.s_pos = static_cast<double>(1 + covered) / static_cast<double>(1 + same_total);
    s.s_neg = hits_opposite ? 0.0 : 1.0;

    s.area_delta = std::abs(static_cast<double>(areas[k]) - static_cast<double>(in.prev->area()));
    s.limit = limit;
    if (in.cfg.use_adaptive) {
      s.s_adaptive = s.area_delta < limit ? 1.0 : 0.0;
    } else {
      const auto claimed = static_cast<std::size_t>(
          std::partition_point(sorted.begin(), sorted.end(), [&](double v) { return v / lambda <= 1.0; }) -
          sorted.begin());
      s.s_adaptive = static_cast<double>(claimed) < prior_cap ? 1.0 : 0.0;
    }
    s.total = s.s_edge * s.s_pos * s.s_neg * s.s_adaptive;
  }
  return out;
}

ScoreBreakdown score(double lambda, const ScoringInputs& in) {
  if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "lambda must be > 0");
  std::vector<double> grid;
  try {
    grid = candidate_lambdas(*in.markov, in.cfg.sigma_prior, in.level);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCandidates) throw;
  }
  auto pos = std::lower_bound(grid.begin(), grid.end(), lambda);
  if (pos == grid.end() || *pos != lambda) pos = grid.insert(pos, lambda);
  const auto k = static_cast<std::size_t>(pos - grid.begin());
  return score_candidates(grid, in)[k];
}

std::size_t argmax_score(std::span<const ScoreBreakdown> scores, bool relax_gate) {
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto& s = scores[k];
    const double v = relax_gate ? s.s_edge * s.s_pos * s.s_neg : s.total;
    if (v > best_value + kScoreTieTolerance) {
      best = k;
      best_value = v;
    }
  }
  return best;
}

ScaleSelection select_scale_over(std::span<const double> candidates, const ScoringInputs& in) {
  ScaleSelection sel;
  sel.breakdowns = score_candidates(candidates, in);
  sel.candidate = argmax_score(sel.breakdowns, false);
  if (!(sel.breakdowns[sel.candidate].total > 0.0)) {
    sel.candidate = argmax_score(sel.breakdowns, true);
    sel.fallback_used = true;
  }
  sel.lambda = sel.breakdowns[sel.candidate].lambda;
  return sel;
}

ScaleSelection select_scale(const ScoringInputs& in) {
  if (in.markov == nullptr) fail(ErrorCode::InvalidArgument, "scoring inputs incomplete");
  const auto candidates = candidate_lambdas(*in.markov, in.cfg.sigma_prior, in.level);
  return select_scale_over(candidates, in);
}

}  // namespace m2n2
