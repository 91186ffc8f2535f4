#pragma once

#include <Eigen/Core>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace nvs {

using Color = Eigen::Vector3d;

// Dense 2D field over the image domain. Row-major storage, (x, y) indexing
// with x along the width.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& value = T{})
      : width_(width), height_(height),
        cells_(static_cast<size_t>(width) * static_cast<size_t>(height), value) {
    assert(width >= 0 && height >= 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return cells_.empty(); }
  size_t size() const { return cells_.size(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  T& operator()(int x, int y) {
    assert(in_bounds(x, y));
    return cells_[static_cast<size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    assert(in_bounds(x, y));
    return cells_[static_cast<size_t>(y) * width_ + x];
  }

  T& operator[](size_t i) { return cells_[i]; }
  const T& operator[](size_t i) const { return cells_[i]; }

  std::vector<T>& data() { return cells_; }
  const std::vector<T>& data() const { return cells_; }

  void fill(const T& value) { cells_.assign(cells_.size(), value); }

  bool same_size(int w, int h) const { return width_ == w && height_ == h; }

  template <typename U>
  bool same_size(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> cells_;
};

using Mask = Grid<std::uint8_t>;

// Additive identity per cell type. Eigen vectors default-construct
// uninitialized, so generic accumulation code must start from this.
template <typename T>
inline T zero_cell() {
  return T(0);
}
template <>
inline Color zero_cell<Color>() {
  return Color::Zero();
}

// Bilinear sample at continuous coordinates with the origin at the top-left
// pixel center. Valid for 0 <= u <= width-1 and 0 <= v <= height-1.
template <typename T>
T sample_bilinear(const Grid<T>& g, double u, double v) {
  assert(u >= 0.0 && u <= g.width() - 1 + 1e-9);
  assert(v >= 0.0 && v <= g.height() - 1 + 1e-9);
  int x0 = static_cast<int>(std::floor(u));
  int y0 = static_cast<int>(std::floor(v));
  if (x0 > g.width() - 2) x0 = g.width() - 2;
  if (y0 > g.height() - 2) y0 = g.height() - 2;
  if (x0 < 0) x0 = 0;
  if (y0 < 0) y0 = 0;
  double fu = u - x0;
  double fv = v - y0;
  if (g.width() == 1) { x0 = 0; fu = 0.0; }
  if (g.height() == 1) { y0 = 0; fv = 0.0; }
  int x1 = g.width() == 1 ? 0 : x0 + 1;
  int y1 = g.height() == 1 ? 0 : y0 + 1;
  return g(x0, y0) * ((1.0 - fu) * (1.0 - fv)) + g(x1, y0) * (fu * (1.0 - fv)) +
         g(x0, y1) * ((1.0 - fu) * fv) + g(x1, y1) * (fu * fv);
}

inline bool bilinear_in_bounds(int width, int height, double u, double v) {
  return u >= 0.0 && u <= width - 1.0 && v >= 0.0 && v <= height - 1.0;
}

}  // namespace nvs
