#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace m2n2 {

struct Dims {
  int height = 0;
  int width = 0;

  std::size_t size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  bool contains(int y, int x) const { return y >= 0 && x >= 0 && y < height && x < width; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// Row-major H×W field with `channels` interleaved values per pixel.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(Dims dims, int channels = 1, T fill = T{})
      : dims_(dims), channels_(channels), data_(dims.size() * static_cast<std::size_t>(channels), fill) {}
  Grid(Dims dims, int channels, std::vector<T> data) : dims_(dims), channels_(channels), data_(std::move(data)) {
    assert(data_.size() == dims.size() * static_cast<std::size_t>(channels));
  }

  Dims dims() const { return dims_; }
  int height() const { return dims_.height; }
  int width() const { return dims_.width; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  std::size_t pixels() const { return dims_.size(); }

  T& operator()(int y, int x, int c = 0) { return data_[index(y, x) * channels_ + c]; }
  const T& operator()(int y, int x, int c = 0) const { return data_[index(y, x) * channels_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int y, int x) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width) + static_cast<std::size_t>(x);
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Dims dims_{};
  int channels_ = 1;
  std::vector<T> data_;
};

using RealMap = Grid<double>;

}  // namespace m2n2
