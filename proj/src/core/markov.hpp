#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "attention_ops.hpp"
#include "grid.hpp"

namespace m2n2 {

// Iteration-count field of one prompt on the coarse grid. Integer valued,
// stored as reals so it can be filtered later.
struct CoarseMarkovMap {
  RealMap values;
  std::size_t seed = 0;
  double tau = 0.4;
  int t_max = 64;
};

struct MarkovParams {
  double tau = 0.4;
  int t_max = 64;
};

// Called with (t, p_t) after every propagation step, p_0 included.
using MarkovObserver = std::function<void(int, std::span<const double>)>;

// m[k] = min{t : p_t[k] / max(p_t) > tau} with p_t = onehot(seed) * A^t;
// states not reached within t_max - 1 steps get t_max.
CoarseMarkovMap markov_map(const AttentionTensor& a, std::size_t seed, const MarkovParams& params,
                           const MarkovObserver& observer = {});

std::vector<CoarseMarkovMap> markov_maps_batch(const AttentionTensor& a, std::span<const std::size_t> seeds,
                                               const MarkovParams& params);

// Precondition check shared by the single and batch entry points.
void require_doubly_stochastic(const AttentionTensor& a);

}  // namespace m2n2
