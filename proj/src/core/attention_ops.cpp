#include "attention_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace m2n2 {
namespace {

void check_square(const AttentionTensor& a) {
  if (a.mat.size() != a.states() * a.states())
    fail(ErrorCode::DimMismatch, "attention matrix is not (h*w)x(h*w)");
}

void normalize_rows(AttentionTensor& a) {
  const std::size_t n = a.states();
  for (std::size_t r = 0; r < n; ++r) {
    double* row = a.mat.data() + r * n;
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) sum += row[c];
    if (!(sum > 0.0) || !std::isfinite(sum)) fail(ErrorCode::DegenerateRow, "row " + std::to_string(r) + " has no mass");
    const double inv = 1.0 / sum;
    for (std::size_t c = 0; c < n; ++c) row[c] *= inv;
  }
}

}  // namespace

double max_row_deviation(const AttentionTensor& a) {
  const std::size_t n = a.states();
  double worst = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double sum = 0.0;
    for (double v : a.row(r)) sum += v;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

double max_col_deviation(const AttentionTensor& a) {
  const std::size_t n = a.states();
  std::vector<double> sums(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = a.mat.data() + r * n;
    for (std::size_t c = 0; c < n; ++c) sums[c] += row[c];
  }
  double worst = 0.0;
  for (double s : sums) worst = std::max(worst, std::abs(s - 1.0));
  return worst;
}

AttentionTensor aggregate(const BlockStack& stack) {
  const std::size_t n = stack.coarse.size();
  if (stack.blocks.empty()) fail(ErrorCode::WeightError, "no attention blocks");
  double total_weight = 0.0;
  for (const auto& b : stack.blocks) {
    if (b.weight < 0.0 || !std::isfinite(b.weight)) fail(ErrorCode::WeightError, "block weights must be >= 0");
    if (b.heads < 1 || b.data.size() != static_cast<std::size_t>(b.heads) * n * n)
      fail(ErrorCode::DimMismatch, "block tensor does not match heads x (h*w) x (h*w)");
    total_weight += b.weight;
  }
  if (!(total_weight > 0.0)) fail(ErrorCode::WeightError, "all block weights are zero");

  AttentionTensor out{std::vector<double>(n * n, 0.0), stack.coarse, Stochasticity::Row};
  for (const auto& b : stack.blocks) {
    if (b.weight == 0.0) continue;
    const double scale = (b.weight / total_weight) / b.heads;
    for (int h = 0; h < b.heads; ++h) {
      const double* head = b.data.data() + static_cast<std::size_t>(h) * n * n;
      for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) sum += head[r * n + c];
        if (std::abs(sum - 1.0) > kRowStochasticTolerance)
          fail(ErrorCode::InvalidArgument, "attention head row " + std::to_string(r) + " is not row-stochastic");
      }
      for (std::size_t i = 0; i < n * n; ++i) out.mat[i] += scale * head[i];
    }
  }
  return out;
}

AttentionTensor apply_temperature(const AttentionTensor& a, double beta) {
  check_square(a);
  if (!(beta > 0.0) || !std::isfinite(beta)) fail(ErrorCode::InvalidArgument, "temperature beta must be > 0");
  AttentionTensor out = a;
  out.tag = Stochasticity::Row;
  if (beta != 1.0) {
    for (auto& v : out.mat) v = std::pow(v, beta);
  }
  normalize_rows(out);
  return out;
}

IpfResult ipf_normalize(const AttentionTensor& a, double tol, int max_iter) {
  check_square(a);
  if (!(tol > 0.0) || max_iter < 0) fail(ErrorCode::InvalidArgument, "ipf needs tol > 0 and max_iter >= 0");
  const std::size_t n = a.states();
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = a.row(r);
    if (std::none_of(row.begin(), row.end(), [](double v) { return v > 0.0; }))
      fail(ErrorCode::DegenerateRow, "row " + std::to_string(r) + " has no positive entry");
  }

  IpfResult result{a, 0, 0.0};
  AttentionTensor& m = result.tensor;
  std::vector<double> col(n);
  auto deviation = [&] { return std::max(max_row_deviation(m), max_col_deviation(m)); };

  result.max_deviation = deviation();
  while (result.max_deviation > tol && result.iterations < max_iter) {
    normalize_rows(m);
    std::fill(col.begin(), col.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const double* row = m.mat.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) col[c] += row[c];
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (!(col[c] > 0.0)) fail(ErrorCode::DegenerateRow, "column " + std::to_string(c) + " has no mass");
      col[c] = 1.0 / col[c];
    }
    for (std::size_t r = 0; r < n; ++r) {
      double* row = m.mat.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) row[c] *= col[c];
    }
    ++result.iterations;
    result.max_deviation = deviation();
  }
  if (result.max_deviation > 10.0 * tol)
    fail(ErrorCode::NoConvergence, "IPF deviation " + std::to_string(result.max_deviation) + " after " +
                                       std::to_string(result.iterations) + " iterations");
  m.tag = Stochasticity::Doubly;
  return result;
}

AttentionTensor flip_average(const AttentionTensor& a, const AttentionTensor& a_flipped) {
  check_square(a);
  check_square(a_flipped);
  if (a.coarse != a_flipped.coarse) fail(ErrorCode::DimMismatch, "flip pair has different coarse dims");
  const std::size_t n = a.states();
  const int h = a.coarse.height;
  const int w = a.coarse.width;
  std::vector<std::size_t> mirror(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      mirror[static_cast<std::size_t>(y) * w + x] = static_cast<std::size_t>(y) * w + (w - 1 - x);

  AttentionTensor out{std::vector<double>(n * n), a.coarse, Stochasticity::Row};
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t fr = mirror[r];
    for (std::size_t c = 0; c < n; ++c) out.mat[r * n + c] = 0.5 * (a.at(r, c) + a_flipped.at(fr, mirror[c]));
  }
  normalize_rows(out);
  return out;
}

}  // namespace m2n2
