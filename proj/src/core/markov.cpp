#include "markov.hpp"

#include <algorithm>
#include <string>

#include "error.hpp"

namespace m2n2 {
namespace {

void check_params(const AttentionTensor& a, std::size_t seed, const MarkovParams& params) {
  if (!(params.tau > 0.0 && params.tau < 1.0)) fail(ErrorCode::InvalidArgument, "tau must lie in (0, 1)");
  if (params.t_max < 1) fail(ErrorCode::InvalidArgument, "t_max must be >= 1");
  if (seed >= a.states())
    fail(ErrorCode::SeedOutOfRange, "seed " + std::to_string(seed) + " >= " + std::to_string(a.states()));
}

CoarseMarkovMap run(const AttentionTensor& a, std::size_t seed, const MarkovParams& params,
                    const MarkovObserver& observer) {
  const std::size_t n = a.states();
  CoarseMarkovMap out{RealMap(a.coarse, 1, static_cast<double>(params.t_max)), seed, params.tau, params.t_max};
  std::vector<double> p(n, 0.0);
  std::vector<double> next(n);
  std::vector<char> assigned(n, 0);
  std::size_t remaining = n;
  p[seed] = 1.0;

  for (int t = 0;; ++t) {
    if (observer) observer(t, p);
    const double peak = *std::max_element(p.begin(), p.end());
    for (std::size_t k = 0; k < n; ++k) {
      if (!assigned[k] && p[k] / peak > params.tau) {
        assigned[k] = 1;
        out.values[k] = static_cast<double>(t);
        --remaining;
      }
    }
    if (remaining == 0 || t + 1 >= params.t_max) break;

    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const double w = p[r];
      if (w == 0.0) continue;
      const double* row = a.mat.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) next[c] += w * row[c];
    }
    p.swap(next);
  }
  return out;
}

}  // namespace

void require_doubly_stochastic(const AttentionTensor& a) {
  if (a.mat.size() != a.states() * a.states()) fail(ErrorCode::DimMismatch, "attention matrix is not square");
  if (a.tag != Stochasticity::Doubly) fail(ErrorCode::NotDoublyStochastic, "operator is tagged row-stochastic");
  const double dev = std::max(max_row_deviation(a), max_col_deviation(a));
  if (dev > kRowStochasticTolerance)
    fail(ErrorCode::NotDoublyStochastic, "row/column sums deviate by " + std::to_string(dev));
}

CoarseMarkovMap markov_map(const AttentionTensor& a, std::size_t seed, const MarkovParams& params,
                           const MarkovObserver& observer) {
  require_doubly_stochastic(a);
  check_params(a, seed, params);
  return run(a, seed, params, observer);
}

std::vector<CoarseMarkovMap> markov_maps_batch(const AttentionTensor& a, std::span<const std::size_t> seeds,
                                               const MarkovParams& params) {
  require_doubly_stochastic(a);
  for (auto s : seeds) check_params(a, s, params);
  std::vector<CoarseMarkovMap> maps;
  maps.reserve(seeds.size());
  for (auto s : seeds) maps.push_back(run(a, s, params, {}));
  return maps;
}

}  // namespace m2n2
