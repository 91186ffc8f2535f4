#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "nvs/camera.hpp"
#include "nvs/grid.hpp"
#include "nvs/parallel.hpp"

namespace nvs {

struct ColoredPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Color color = Color::Zero();
};

// Sparse maps produced by projecting a point cloud into a camera. Unoccupied
// pixels hold depth 0 and black.
struct SplatMap {
  Grid<double> depth;
  Grid<Color> color;
  Mask occupancy;
  int occupied_count = 0;
};

// Nearest-pixel splatting with z-order: on collisions the smallest depth wins.
inline SplatMap splat_points(std::span<const ColoredPoint> points, const CameraPose& cam,
                             int width, int height) {
  SplatMap out;
  out.depth = Grid<double>(width, height, 0.0);
  out.color = Grid<Color>(width, height, Color::Zero());
  out.occupancy = Mask(width, height, 0);
  for (const ColoredPoint& pt : points) {
    auto proj = project(cam, pt.position);
    if (!proj) continue;
    int x = static_cast<int>(std::lround(proj->pixel.u));
    int y = static_cast<int>(std::lround(proj->pixel.v));
    if (!out.depth.in_bounds(x, y)) continue;
    if (!out.occupancy(x, y) || proj->depth < out.depth(x, y)) {
      if (!out.occupancy(x, y)) ++out.occupied_count;
      out.depth(x, y) = proj->depth;
      out.color(x, y) = pt.color;
      out.occupancy(x, y) = 1;
    }
  }
  return out;
}

struct WarpResult {
  Grid<Color> color;
  Mask valid;
};

// Backward warp: each destination pixel with positive depth is lifted to 3D
// through dst_cam and sampled bilinearly in the source image. Pixels whose
// projection leaves the source frame or lands behind src_cam are masked out.
inline WarpResult warp_frame(const Grid<Color>& src_img, const CameraPose& src_cam,
                             const CameraPose& dst_cam, const Grid<double>& dst_depth) {
  const int w = dst_depth.width();
  const int h = dst_depth.height();
  WarpResult out;
  out.color = Grid<Color>(w, h, Color::Zero());
  out.valid = Mask(w, h, 0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double d = dst_depth(x, y);
      if (!(d > 0.0)) continue;
      Eigen::Vector3d p = unproject(dst_cam, {{static_cast<double>(x), static_cast<double>(y)}, d});
      auto proj = project(src_cam, p);
      if (!proj) continue;
      if (!bilinear_in_bounds(src_img.width(), src_img.height(), proj->pixel.u, proj->pixel.v))
        continue;
      out.color(x, y) = sample_bilinear(src_img, proj->pixel.u, proj->pixel.v);
      out.valid(x, y) = 1;
    }
  });
  return out;
}

// Binary visibility: pixel x of the destination view is visible in src_cam iff
// among all destination pixels mapping to the same integer source pixel it
// attains the minimal source-frame depth (within a tolerance scaled by the
// scene depth range).
inline Mask visibility_map(const CameraPose& dst_cam, const Grid<double>& dst_depth,
                           const CameraPose& src_cam, int src_width, int src_height) {
  const int w = dst_depth.width();
  const int h = dst_depth.height();
  Mask vis(w, h, 0);
  Grid<double> src_depth_of(w, h, -1.0);  // source-frame depth per dst pixel
  Grid<int> src_pixel_of(w, h, -1);       // flattened source pixel index

  double min_d = std::numeric_limits<double>::infinity();
  double max_d = -std::numeric_limits<double>::infinity();
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double d = dst_depth(x, y);
      if (!(d > 0.0)) continue;
      Eigen::Vector3d p = unproject(dst_cam, {{static_cast<double>(x), static_cast<double>(y)}, d});
      auto proj = project(src_cam, p);
      if (!proj) continue;
      int sx = static_cast<int>(std::lround(proj->pixel.u));
      int sy = static_cast<int>(std::lround(proj->pixel.v));
      if (sx < 0 || sx >= src_width || sy < 0 || sy >= src_height) continue;
      src_depth_of(x, y) = proj->depth;
      src_pixel_of(x, y) = sy * src_width + sx;
    }
  });
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double d = src_depth_of(x, y);
      if (d < 0.0) continue;
      if (d < min_d) min_d = d;
      if (d > max_d) max_d = d;
    }
  }
  if (!(max_d >= min_d)) return vis;  // nothing projects into the source

  const double eps_z = 1e-4 * std::max(max_d - min_d, 0.0) + 1e-12;
  std::vector<double> zbuf(static_cast<size_t>(src_width) * src_height,
                           std::numeric_limits<double>::infinity());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int sp = src_pixel_of(x, y);
      if (sp < 0) continue;
      double d = src_depth_of(x, y);
      if (d < zbuf[static_cast<size_t>(sp)]) zbuf[static_cast<size_t>(sp)] = d;
    }
  }
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      int sp = src_pixel_of(x, y);
      if (sp < 0) continue;
      if (src_depth_of(x, y) <= zbuf[static_cast<size_t>(sp)] + eps_z) vis(x, y) = 1;
    }
  });
  return vis;
}

// Forward reprojection of an already-rendered frame (depth + color in
// src_cam) into dst_cam, used for the streaming temporal constraint.
struct ReprojectedFrame {
  Grid<double> depth;
  Grid<Color> color;
  Mask valid;
};

inline ReprojectedFrame reproject_frame(const Grid<double>& src_depth, const Grid<Color>& src_color,
                                        const CameraPose& src_cam, const CameraPose& dst_cam,
                                        int dst_width, int dst_height) {
  std::vector<ColoredPoint> points;
  points.reserve(src_depth.size());
  for (int y = 0; y < src_depth.height(); ++y) {
    for (int x = 0; x < src_depth.width(); ++x) {
      double d = src_depth(x, y);
      if (!(d > 0.0)) continue;
      ColoredPoint pt;
      pt.position = unproject(src_cam, {{static_cast<double>(x), static_cast<double>(y)}, d});
      pt.color = src_color(x, y);
      points.push_back(pt);
    }
  }
  SplatMap splat = splat_points(points, dst_cam, dst_width, dst_height);
  ReprojectedFrame out;
  out.depth = std::move(splat.depth);
  out.color = std::move(splat.color);
  out.valid = std::move(splat.occupancy);
  return out;
}

}  // namespace nvs
