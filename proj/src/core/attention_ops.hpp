#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grid.hpp"

namespace m2n2 {

enum class Stochasticity { Row, Doubly };

// (h·w)×(h·w) nonnegative transition operator over coarse pixel states,
// stored row-major. Row r is the distribution of the next state given state r.
struct AttentionTensor {
  std::vector<double> mat;
  Dims coarse;
  Stochasticity tag = Stochasticity::Row;

  std::size_t states() const { return coarse.size(); }
  double at(std::size_t r, std::size_t c) const { return mat[r * states() + c]; }
  double& at(std::size_t r, std::size_t c) { return mat[r * states() + c]; }
  std::span<const double> row(std::size_t r) const { return {mat.data() + r * states(), states()}; }
};

// Multi-head attention of one block: heads × (h·w) × (h·w), row-major.
struct AttentionBlock {
  double weight = 1.0;
  int heads = 1;
  std::vector<double> data;
};

struct BlockStack {
  Dims coarse;
  std::vector<AttentionBlock> blocks;
};

struct IpfResult {
  AttentionTensor tensor;
  int iterations = 0;
  double max_deviation = 0.0;
};

inline constexpr double kRowStochasticTolerance = 1e-3;

// Weighted block average of per-block head means. Weights are renormalized to sum 1.
AttentionTensor aggregate(const BlockStack& stack);

// Elementwise power followed by row renormalization.
AttentionTensor apply_temperature(const AttentionTensor& a, double beta);

// Alternating row/column normalization (Sinkhorn-Knopp).
IpfResult ipf_normalize(const AttentionTensor& a, double tol = 1e-4, int max_iter = 50);

// Averages `a` with the un-mirrored `a_flipped`, which was computed on the
// horizontally mirrored image, then renormalizes rows.
AttentionTensor flip_average(const AttentionTensor& a, const AttentionTensor& a_flipped);

// Max |row sum - 1| and max |column sum - 1|.
double max_row_deviation(const AttentionTensor& a);
double max_col_deviation(const AttentionTensor& a);

}  // namespace m2n2
