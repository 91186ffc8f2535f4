#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "nvs/errors.hpp"
#include "nvs/grid.hpp"

namespace nvs {

// columns of metrics.csv; psnr_db and depth_rmse stay NaN when no ground
// truth is available
struct FrameMetrics {
  int frame_index = 0;
  double psnr_db = std::numeric_limits<double>::quiet_NaN();
  double depth_rmse = std::numeric_limits<double>::quiet_NaN();
  double temporal_delta = 0.0;  // mean |I_t - I_{t-1}|, 0 for the first frame
  double coverage = 0.0;        // fraction of pixels touched by any data term
};

namespace detail {

inline void require_same_size(int aw, int ah, int bw, int bh) {
  if (aw != bw || ah != bh)
    throw LengthMismatch("grid sizes differ: " + std::to_string(aw) + "x" + std::to_string(ah) +
                         " vs " + std::to_string(bw) + "x" + std::to_string(bh));
}

}  // namespace detail

// capped at 99 dB for exact matches, so the sentinel stays finite and sortable
inline double psnr(const Grid<Color>& img, const Grid<Color>& gt) {
  detail::require_same_size(img.width(), img.height(), gt.width(), gt.height());
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(img.size()); ++i) acc += (img[i] - gt[i]).squaredNorm();
  double mse = acc / (3.0 * img.size());
  if (mse <= 0.0) return 99.0;
  return std::max(10.0 * std::log10(1.0 / mse), 0.0);
}

// RMSE over the pixels where ground truth has geometry (depth > 0)
inline double depth_rmse(const Grid<double>& depth, const Grid<double>& gt) {
  detail::require_same_size(depth.width(), depth.height(), gt.width(), gt.height());
  double acc = 0.0;
  int n = 0;
  for (int i = 0; i < static_cast<int>(depth.size()); ++i)
    if (gt[i] > 0.0) {
      double d = depth[i] - gt[i];
      acc += d * d;
      ++n;
    }
  return n > 0 ? std::sqrt(acc / n) : 0.0;
}

inline double mean_abs_diff(const Grid<Color>& a, const Grid<Color>& b) {
  detail::require_same_size(a.width(), a.height(), b.width(), b.height());
  double acc = 0.0;
  for (int i = 0; i < static_cast<int>(a.size()); ++i)
    acc += (a[i] - b[i]).cwiseAbs().sum();
  return acc / (3.0 * a.size());
}

inline double coverage_fraction(const Mask& m) {
  if (m.empty()) return 0.0;
  double acc = 0.0;
  for (unsigned char v : m.data()) acc += v ? 1.0 : 0.0;
  return acc / m.size();
}

inline void write_metrics_csv(const std::vector<FrameMetrics>& rows,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << "frame_index,psnr_db,depth_rmse,temporal_delta,coverage\n";
  char buf[160];
  for (const FrameMetrics& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g\n", r.frame_index, r.psnr_db,
                  r.depth_rmse, r.temporal_delta, r.coverage);
    out << buf;
  }
  if (!out) throw IoFailure("short write to " + path.string());
}

}  // namespace nvs
