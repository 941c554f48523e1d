#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fusion.hpp"
#include "grid.hpp"
#include "mask.hpp"
#include "prompt.hpp"

namespace m2n2 {

inline constexpr double kLambdaOffset = 1e-6;
inline constexpr std::size_t kMaxCandidates = 512;
// Totals closer than this are treated as ties and resolved toward the smaller lambda.
inline constexpr double kScoreTieTolerance = 1e-12;

struct AdaptiveConfig {
  double sigma_adaptive = 6.0;
  double sigma_prior = 0.9;
  double r_min = 1.0;
  bool use_adaptive = true;
};

struct ScoreBreakdown {
  double lambda = 0.0;
  double s_edge = 0.0;
  double s_pos = 0.0;
  double s_neg = 0.0;
  double s_adaptive = 0.0;  // the size gate: adaptive, or the prior gate when adaptive is off
  double total = 0.0;
  double area_delta = 0.0;
  double limit = std::numeric_limits<double>::infinity();
};

// Sorted values and gradient-magnitude prefix sums of one map; reusable
// across every scoring call for that map.
struct LevelIndex {
  std::vector<double> sorted_values;
  std::vector<double> gradient_prefix;  // size n + 1, in sorted-value order

  // Number of pixels with value <= v.
  std::size_t count_at_most(double v) const;
};

LevelIndex build_level_index(const RealMap& markov);

// Central-difference gradient magnitude (one-sided at borders).
RealMap gradient_magnitude(const RealMap& markov);

// Distance from the point to the nearest pixel of `prev` carrying its label; +inf if none.
double boundary_distance(const PromptPoint& point, const Segmentation& prev);

// pi * (sigma_adaptive * max(r, r_min))^2, +inf for r = +inf.
double size_limit(double r, const AdaptiveConfig& cfg);

std::vector<double> candidate_lambdas(const RealMap& markov, double sigma_prior, const LevelIndex* level = nullptr);

struct ScoringInputs {
  const RealMap* markov = nullptr;
  const LevelIndex* level = nullptr;  // optional; built on demand
  PromptPoint point;
  int index = 0;                         // prompt order of `point`, for fusion ties
  std::span<const PromptPoint> others;   // the prompt set X without `point`
  const Segmentation* prev = nullptr;    // reference segmentation for the size change
  std::span<const ScaledMap> other_maps; // fixed scaled maps of the other prompts
  const FusionBase* other_base = nullptr; // optional precomputed fusion of other_maps
  AdaptiveConfig cfg;
};

// Scores every candidate; s_edge is normalized over this candidate set.
std::vector<ScoreBreakdown> score_candidates(std::span<const double> candidates, const ScoringInputs& in);

// Scores one lambda against the default candidate grid of the map (lambda is
// inserted into the grid for edge-band placement).
ScoreBreakdown score(double lambda, const ScoringInputs& in);

struct ScaleSelection {
  double lambda = 0.0;
  std::size_t candidate = 0;
  bool fallback_used = false;
  std::vector<ScoreBreakdown> breakdowns;
};

ScaleSelection select_scale(const ScoringInputs& in);
ScaleSelection select_scale_over(std::span<const double> candidates, const ScoringInputs& in);

// Index of the best total, smallest lambda on ties; `relax_gate` forces the size gate to 1.
std::size_t argmax_score(std::span<const ScoreBreakdown> scores, bool relax_gate);

}  // namespace m2n2
