#pragma once

#include <cstdint>
#include <vector>

#include "depthscan/errors.hpp"

namespace ds {

/// Dense row-major H x W grid. Pixel (u, v) = (column, row), origin top-left.
template <typename T>
class Grid {
 public:
  Grid() = default;

  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) {
      throw ContractViolation("Grid dimensions must be positive");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int u, int v) const { return u >= 0 && u < width_ && v >= 0 && v < height_; }

  T& operator()(int u, int v) { return data_[static_cast<std::size_t>(v) * width_ + u]; }
  const T& operator()(int u, int v) const {
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(const T& value) { data_.assign(data_.size(), value); }

  bool same_size(int width, int height) const { return width_ == width && height_ == height; }

  template <typename U>
  bool same_size(const Grid<U>& other) const {
    return same_size(other.width(), other.height());
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Validity mask: 0 = invalid, nonzero = valid.
using Mask = Grid<std::uint8_t>;

inline long count_valid(const Mask& mask) {
  long n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.data()[i]) ++n;
  }
  return n;
}

}  // namespace ds
