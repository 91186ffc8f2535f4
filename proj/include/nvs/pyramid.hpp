#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nvs/grid.hpp"

namespace nvs {

struct GridTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int level_dim(int base, int level) {
  int d = base;
  for (int k = 0; k < level; ++k) d = (d + 1) / 2;
  return d;
}

inline void check_pyramid_dims(int width, int height, int levels, int min_dim) {
  if (levels < 1) throw GridTooSmall("pyramid needs at least one level");
  int cw = level_dim(width, levels - 1);
  int ch = level_dim(height, levels - 1);
  if (cw < min_dim || ch < min_dim)
    throw GridTooSmall("coarsest level " + std::to_string(cw) + "x" + std::to_string(ch) +
                       " below minimum " + std::to_string(min_dim) + "x" +
                       std::to_string(min_dim));
}

// 2x2 box average; border cells with an odd parent dimension average the 1 or
// 2 pixels that exist.
template <typename T>
Grid<T> downsample_box(const Grid<T>& fine) {
  const int cw = (fine.width() + 1) / 2;
  const int ch = (fine.height() + 1) / 2;
  Grid<T> coarse(cw, ch, zero_cell<T>());
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      T sum = zero_cell<T>();
      int count = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          int fx = 2 * x + dx;
          int fy = 2 * y + dy;
          if (fx >= fine.width() || fy >= fine.height()) continue;
          sum += fine(fx, fy);
          ++count;
        }
      }
      coarse(x, y) = sum / count;
    }
  }
  return coarse;
}

// Occupancy-weighted 2x2 average for sparse grids: empty pixels do not dilute
// the average, and any positive fine weight keeps the coarse cell occupied.
template <typename T>
std::pair<Grid<T>, Grid<double>> downsample_weighted(const Grid<T>& fine,
                                                     const Grid<double>& weight) {
  const int cw = (fine.width() + 1) / 2;
  const int ch = (fine.height() + 1) / 2;
  Grid<T> cv(cw, ch, zero_cell<T>());
  Grid<double> cwgt(cw, ch, 0.0);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      T sum = zero_cell<T>();
      double wsum = 0.0;
      int count = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          int fx = 2 * x + dx;
          int fy = 2 * y + dy;
          if (fx >= fine.width() || fy >= fine.height()) continue;
          sum += fine(fx, fy) * weight(fx, fy);
          wsum += weight(fx, fy);
          ++count;
        }
      }
      if (wsum > 0.0) cv(x, y) = sum / wsum;
      cwgt(x, y) = wsum / count;
    }
  }
  return {std::move(cv), std::move(cwgt)};
}

// levels grids, finest first; level k is ceil(w/2^k) x ceil(h/2^k).
template <typename T>
std::vector<Grid<T>> build_pyramid(const Grid<T>& base, int levels, int min_dim = 1) {
  check_pyramid_dims(base.width(), base.height(), levels, min_dim);
  std::vector<Grid<T>> out;
  out.reserve(levels);
  out.push_back(base);
  for (int k = 1; k < levels; ++k) out.push_back(downsample_box(out.back()));
  return out;
}

template <typename T>
std::pair<std::vector<Grid<T>>, std::vector<Grid<double>>> build_weighted_pyramid(
    const Grid<T>& base, const Grid<double>& weight, int levels, int min_dim = 1) {
  check_pyramid_dims(base.width(), base.height(), levels, min_dim);
  std::vector<Grid<T>> values;
  std::vector<Grid<double>> weights;
  values.reserve(levels);
  weights.reserve(levels);
  values.push_back(base);
  weights.push_back(weight);
  for (int k = 1; k < levels; ++k) {
    auto [v, w] = downsample_weighted(values.back(), weights.back());
    values.push_back(std::move(v));
    weights.push_back(std::move(w));
  }
  return {std::move(values), std::move(weights)};
}

// Bilinear upsampling initializer for the next-finer level. Pixel centers map
// as u_coarse = (u_fine + 0.5) / 2 - 0.5, matching the camera scaling
// convention, with clamping at the borders.
template <typename T>
Grid<T> upsample_bilinear(const Grid<T>& coarse, int fine_width, int fine_height) {
  Grid<T> fine(fine_width, fine_height, zero_cell<T>());
  for (int y = 0; y < fine_height; ++y) {
    double v = (y + 0.5) * 0.5 - 0.5;
    v = std::min(std::max(v, 0.0), static_cast<double>(coarse.height() - 1));
    for (int x = 0; x < fine_width; ++x) {
      double u = (x + 0.5) * 0.5 - 0.5;
      u = std::min(std::max(u, 0.0), static_cast<double>(coarse.width() - 1));
      fine(x, y) = sample_bilinear(coarse, u, v);
    }
  }
  return fine;
}

}  // namespace nvs
