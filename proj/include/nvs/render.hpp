#pragma once

// Frame-by-frame orchestration. Frames run strictly sequentially: each output
// feeds the temporal term of the next, so there is no cross-frame parallelism
// by design (within a frame the solver parallelizes over rows).

#include <algorithm>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nvs/dataset.hpp"
#include "nvs/diffusion.hpp"
#include "nvs/errors.hpp"
#include "nvs/metrics.hpp"
#include "nvs/view_ranking.hpp"
#include "nvs/warp.hpp"

namespace nvs {

// Wraps whatever went wrong while rendering one frame with its index, so the
// caller can report which frame aborted the run.
struct FrameFailure : std::runtime_error {
  int frame_index;
  FrameFailure(int t, const std::string& why)
      : std::runtime_error("frame " + std::to_string(t) + ": " + why), frame_index(t) {}
};

// Reference imagery for metric computation; depth may be empty when only
// color ground truth exists.
struct GroundTruth {
  std::vector<Grid<Color>> color;
  std::vector<Grid<double>> depth;
};

// Loads dir/frame_%05d.png (+ depth_%05d.pfm when present) for the first
// `frames` timesteps. Returns nullopt when the directory does not exist;
// an existing directory with missing frames is an error.
inline std::optional<GroundTruth> load_ground_truth(const std::filesystem::path& dir, int frames) {
  if (!std::filesystem::exists(dir)) return std::nullopt;
  GroundTruth gt;
  gt.color.reserve(frames);
  for (int t = 0; t < frames; ++t) gt.color.push_back(load_image(dir / frame_file_name(t)));
  if (std::filesystem::exists(dir / depth_file_name(0))) {
    gt.depth.reserve(frames);
    for (int t = 0; t < frames; ++t) gt.depth.push_back(load_depth(dir / depth_file_name(t)));
  }
  return gt;
}

struct SequenceResult {
  std::vector<FrameMetrics> metrics;
  int total_pcg_iters = 0;
};

// Renders path.poses[t] from the inputs at timestep t for every t, writing
// frame_%05d.png, depth_%05d.pfm and metrics.csv into out_dir. The previous
// output frame supplies the temporal attachment (nothing at t = 0).
inline SequenceResult render_sequence(const FrameSet& data,
                                      const std::vector<TimestepPointCloud>& clouds,
                                      const CameraPath& path, const SolverParams& params,
                                      const std::filesystem::path& out_dir,
                                      const GroundTruth* gt = nullptr) {
  const int frames = static_cast<int>(path.poses.size());
  if (data.num_views() < 1) throw LengthMismatch("no input views");
  if (frames > data.num_frames())
    throw PoseCountMismatch("virtual path has " + std::to_string(frames) + " poses but inputs stop at " +
                            std::to_string(data.num_frames()) + " timesteps");
  if (static_cast<int>(clouds.size()) < frames)
    throw PoseCountMismatch("only " + std::to_string(clouds.size()) + " point clouds for " +
                            std::to_string(frames) + " path poses");
  if (gt && (static_cast<int>(gt->color.size()) < frames ||
             (!gt->depth.empty() && static_cast<int>(gt->depth.size()) < frames)))
    throw LengthMismatch("ground truth shorter than the virtual path");

  std::filesystem::create_directories(out_dir);
  SequenceResult out;
  out.metrics.reserve(frames);
  Grid<Color> prev_color;
  Grid<double> prev_depth;
  for (int t = 0; t < frames; ++t) {
    try {
      std::vector<CameraPose> cams(data.num_views());
      for (int s = 0; s < data.num_views(); ++s) cams[s] = data.views[s].poses[t];
      ViewRanking ranking = rank_views(path.poses[t], cams, params.ranking_sigma, params.n_views);

      std::vector<Grid<Color>> srcs;
      srcs.reserve(ranking.selected.size());
      FrameInputs in;
      for (int s : ranking.selected) {
        srcs.push_back(data.views[s].frames[t]);
        in.source_cams.push_back(cams[s]);
      }
      in.source_images = &srcs;
      in.cloud = &clouds[t].points;
      in.virtual_cam = path.poses[t];
      in.params = params;
      if (t > 0) {
        in.prev_depth = &prev_depth;
        in.prev_color = &prev_color;
        in.prev_cam = path.poses[t - 1];
      }
      MultiscaleResult res = multiscale_solve(in, data.width, data.height);

      save_image(res.color, out_dir / frame_file_name(t));
      save_depth(res.depth, out_dir / depth_file_name(t));

      FrameMetrics m;
      m.frame_index = t;
      if (gt) {
        m.psnr_db = psnr(res.color, gt->color[t]);
        if (!gt->depth.empty()) m.depth_rmse = depth_rmse(res.depth, gt->depth[t]);
      }
      if (t > 0) m.temporal_delta = mean_abs_diff(res.color, prev_color);
      m.coverage = coverage_fraction(res.coverage);
      out.metrics.push_back(m);
      out.total_pcg_iters += res.total_pcg_iters;

      prev_color = std::move(res.color);
      prev_depth = std::move(res.depth);
    } catch (const FrameFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw FrameFailure(t, e.what());
    }
  }
  write_metrics_csv(out.metrics, out_dir / "metrics.csv");
  return out;
}

// ---- reference baselines ----------------------------------------------------
//
// Deliberately naive renderers used as comparison floors in evaluation: the
// method has to beat these to justify solving anything.

namespace detail {

// Multi-source BFS over the 4-neighborhood: each unoccupied pixel inherits the
// value of the nearest occupied one (graph distance, ties resolved by
// row-major visit order, so the result is deterministic).
template <typename T>
void nearest_fill_inplace(Grid<T>& vals, Mask occ) {
  const int w = vals.width(), h = vals.height();
  std::vector<int> frontier, next;
  frontier.reserve(vals.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (occ(x, y)) frontier.push_back(y * w + x);
  if (frontier.empty()) return;
  while (!frontier.empty()) {
    next.clear();
    for (int idx : frontier) {
      const int x = idx % w, y = idx / w;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (!vals.in_bounds(nx[k], ny[k]) || occ(nx[k], ny[k])) continue;
        occ(nx[k], ny[k]) = 1;
        vals(nx[k], ny[k]) = vals(x, y);
        next.push_back(ny[k] * w + nx[k]);
      }
    }
    frontier.swap(next);
  }
}

}  // namespace detail

// Dense depth from a splat map: occupied pixels keep their sample, everything
// else takes the nearest occupied value. All-empty input stays zero.
inline Grid<double> nearest_fill_depth(const SplatMap& splat) {
  Grid<double> out = splat.depth;
  detail::nearest_fill_inplace(out, splat.occupancy);
  return out;
}

// Same fill for a color frame with a validity mask.
inline Grid<Color> nearest_fill_color(const Grid<Color>& img, const Mask& valid) {
  Grid<Color> out = img;
  detail::nearest_fill_inplace(out, valid);
  return out;
}

// Warps one input view into the virtual camera through a baseline depth and
// patches the holes by nearest fill: the classic "reproject your best photo"
// renderer.
inline Grid<Color> warped_view_baseline(const Grid<Color>& src_img, const CameraPose& src_cam,
                                        const CameraPose& virtual_cam,
                                        const Grid<double>& baseline_depth) {
  WarpResult wr = warp_frame(src_img, src_cam, virtual_cam, baseline_depth);
  return nearest_fill_color(wr.color, wr.valid);
}

// ---- ablation ---------------------------------------------------------------

// Applies one named toggle; false for an unknown name.
inline bool apply_toggle(SolverParams& p, const std::string& name) {
  if (name == "no_temporal") p.lambda_t = 0.0;
  else if (name == "no_pc_weights") p.no_pc_weights = true;
  else if (name == "no_depth_weights") p.no_depth_weights = true;
  else if (name == "no_image_grads") p.no_image_grads = true;
  else if (name == "no_proj_weights") p.no_proj_weights = true;
  else return false;
  return true;
}

inline const std::vector<std::string>& all_toggles() {
  static const std::vector<std::string> names = {"no_temporal", "no_pc_weights", "no_depth_weights",
                                                 "no_image_grads", "no_proj_weights"};
  return names;
}

struct AblationRun {
  std::string name;  // "full" or a toggle name
  std::vector<FrameMetrics> metrics;
};

// Renders the full method plus one run per requested toggle, each into its
// own subdirectory, and writes a combined out_dir/ablation.csv for
// side-by-side comparison.
inline std::vector<AblationRun> ablate(const FrameSet& data,
                                       const std::vector<TimestepPointCloud>& clouds,
                                       const CameraPath& path, const SolverParams& params,
                                       const std::vector<std::string>& toggles,
                                       const std::filesystem::path& out_dir,
                                       const GroundTruth* gt = nullptr) {
  for (const std::string& name : toggles) {
    SolverParams probe = params;
    if (!apply_toggle(probe, name)) throw std::invalid_argument("unknown ablation toggle: " + name);
  }

  std::vector<AblationRun> runs;
  runs.push_back({"full", render_sequence(data, clouds, path, params, out_dir / "full", gt).metrics});
  for (const std::string& name : toggles) {
    SolverParams p = params;
    apply_toggle(p, name);
    runs.push_back({name, render_sequence(data, clouds, path, p, out_dir / name, gt).metrics});
  }

  std::ofstream csv(out_dir / "ablation.csv");
  if (!csv) throw IoFailure("cannot open " + (out_dir / "ablation.csv").string() + " for writing");
  csv << "variant,frame_index,psnr_db,depth_rmse,temporal_delta,coverage\n";
  char buf[160];
  for (const AblationRun& run : runs)
    for (const FrameMetrics& r : run.metrics) {
      std::snprintf(buf, sizeof buf, ",%d,%.10g,%.10g,%.10g,%.10g\n", r.frame_index, r.psnr_db,
                    r.depth_rmse, r.temporal_delta, r.coverage);
      csv << run.name << buf;
    }
  if (!csv) throw IoFailure("short write to " + (out_dir / "ablation.csv").string());
  return runs;
}

// ---- offline metrics --------------------------------------------------------

// Scores an already-rendered directory against a ground-truth directory (both
// using the frame_%05d.png / depth_%05d.pfm naming). Depth RMSE is emitted
// only when both sides ship PFMs; coverage reflects positive rendered depth.
inline std::vector<FrameMetrics> compute_metrics_dir(const std::filesystem::path& rendered,
                                                     const std::filesystem::path& gt_dir) {
  namespace fs = std::filesystem;
  int frames = 0;
  while (fs::exists(rendered / frame_file_name(frames))) ++frames;
  if (frames == 0) throw MissingFile("no frames found under " + rendered.string());

  std::vector<FrameMetrics> rows;
  rows.reserve(frames);
  Grid<Color> prev;
  for (int t = 0; t < frames; ++t) {
    Grid<Color> img = load_image(rendered / frame_file_name(t));
    Grid<Color> ref = load_image(gt_dir / frame_file_name(t));
    FrameMetrics m;
    m.frame_index = t;
    m.psnr_db = psnr(img, ref);
    fs::path dp = rendered / depth_file_name(t);
    fs::path gp = gt_dir / depth_file_name(t);
    if (fs::exists(dp)) {
      Grid<double> depth = load_depth(dp);
      Mask occupied(depth.width(), depth.height(), 0);
      for (int i = 0; i < static_cast<int>(depth.size()); ++i) occupied[i] = depth[i] > 0.0;
      m.coverage = coverage_fraction(occupied);
      if (fs::exists(gp)) m.depth_rmse = depth_rmse(depth, load_depth(gp));
    }
    if (t > 0) m.temporal_delta = mean_abs_diff(img, prev);
    prev = std::move(img);
    rows.push_back(m);
  }
  return rows;
}

}  // namespace nvs
