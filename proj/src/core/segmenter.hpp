#pragma once

#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "attention_ops.hpp"
#include "config.hpp"
#include "fusion.hpp"
#include "jbu.hpp"
#include "mask.hpp"
#include "prompt.hpp"
#include "scoring.hpp"
#include "tensor_io.hpp"

namespace m2n2 {

// Bundle plus everything derived from it that every session shares: the
// doubly stochastic operator and the RGBD guide.
struct PreparedBundle {
  std::shared_ptr<const ImageBundle> bundle;
  PipelineConfig config;
  AttentionTensor op;
  GuideImage guide;
  int ipf_iterations = 0;

  Dims dims() const { return bundle->dims(); }
};

std::shared_ptr<const PreparedBundle> prepare_bundle(std::shared_ptr<const ImageBundle> bundle,
                                                     const PipelineConfig& config);

// Filled full-resolution Markov-map of one prompt location plus its level index.
struct PointMap {
  RealMap filled;
  LevelIndex level;
};

PointMap compute_point_map(const PreparedBundle& prepared, int x, int y);

// Coarse state containing full-resolution pixel (x, y).
std::size_t coarse_seed(Dims full, Dims coarse, int x, int y);

// Proportional pixel-centre mapping between resolutions.
PromptPoint coordinate_map(const PromptPoint& p, Dims from, Dims to);

struct ClickResult {
  Segmentation mask;
  bool fallback_used = false;         // any scale selection of the committed pass fell back
  bool newest_fallback = false;       // the clicked point's own selection fell back
  bool pass2_triggered = false;
  bool constraint_residual = false;   // committed change still >= limit without a fallback
  double area_delta = 0.0;            // |A(Y_N) - A(Y_{N-1})|
  double limit = 0.0;                 // L(x_N, y_N, Y_{N-1})
  double pass1_area_delta = 0.0;
  double newest_lambda = 0.0;
  ScoreBreakdown newest_breakdown;
};

// One record per scale selection, kept when tracing is enabled.
struct ScoreTrace {
  int click = 0;
  int pass = 0;
  int point = 0;
  std::vector<int> prompt_set;  // indices forming X for this evaluation
  double lambda = 0.0;
  bool fallback_used = false;
  ScoreBreakdown chosen;
};

// Single-writer interactive session over a prepared bundle.
class Session {
 public:
  explicit Session(std::shared_ptr<const PreparedBundle> prepared);

  const ClickResult& add_prompt(const PromptPoint& p);
  const Segmentation& undo();

  const Segmentation& current() const { return current_; }
  const std::vector<PromptPoint>& points() const { return points_; }
  const std::vector<double>& scales() const { return scales_; }
  const std::vector<ClickResult>& clicks() const { return clicks_; }
  const PreparedBundle& prepared() const { return *prepared_; }
  Dims dims() const { return prepared_->dims(); }

  void enable_trace(bool on) { tracing_ = on; }
  const std::vector<ScoreTrace>& trace() const { return trace_; }

  // Filled map of a prompt location (computed once per location).
  const PointMap& point_map(int x, int y);

 private:
  struct Snapshot {
    Segmentation mask;
    std::vector<double> scales;
  };

  ScaleSelection select(int click, int pass, int i, const std::vector<int>& prompt_set, const Segmentation& prev,
                        std::span<const ScaledMap> others, const FusionBase& base);

  std::shared_ptr<const PreparedBundle> prepared_;
  std::map<std::pair<int, int>, std::unique_ptr<PointMap>> cache_;
  std::vector<PromptPoint> points_;
  std::vector<const PointMap*> maps_;
  std::vector<double> scales_;
  Segmentation current_;
  std::vector<Snapshot> history_;
  std::vector<ClickResult> clicks_;
  bool tracing_ = false;
  std::vector<ScoreTrace> trace_;
};

}  // namespace m2n2
