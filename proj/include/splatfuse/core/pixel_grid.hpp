#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "splatfuse/core/error.hpp"

namespace splatfuse {

// Dense per-pixel field with integer pixel centers at (x, y). Row-major,
// value count == width * height. Bilinear sampling is defined on the
// continuous domain [0, w-1] x [0, h-1].
template <typename T>
class PixelGrid {
 public:
  PixelGrid() = default;
  PixelGrid(int width, int height, const T& fill = T{})
      : width_(width), height_(height) {
    if (width < 1 || height < 1)
      throw DomainError("PixelGrid dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool contains(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }
  bool contains(double x, double y) const {
    return x >= 0.0 && x <= width_ - 1.0 && y >= 0.0 && y <= height_ - 1.0;
  }

  // Bilinear sample; requires contains(x, y).
  T sample(double x, double y) const {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return at(x0, y0) * ((1.0 - fx) * (1.0 - fy)) +
           at(x1, y0) * (fx * (1.0 - fy)) + at(x0, y1) * ((1.0 - fx) * fy) +
           at(x1, y1) * (fx * fy);
  }

  T sample_nearest(double x, double y) const {
    const int xi = static_cast<int>(std::lround(x));
    const int yi = static_cast<int>(std::lround(y));
    return at(std::clamp(xi, 0, width_ - 1), std::clamp(yi, 0, height_ - 1));
  }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const PixelGrid&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GridD = PixelGrid<double>;
using GridU8 = PixelGrid<std::uint8_t>;
using GridI32 = PixelGrid<std::int32_t>;
using GridV2 = PixelGrid<Eigen::Vector2d>;
using GridV3 = PixelGrid<Eigen::Vector3d>;
using GridM2 = PixelGrid<Eigen::Matrix2d>;

}  // namespace splatfuse
