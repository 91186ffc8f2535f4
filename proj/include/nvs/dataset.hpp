#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvs/camera.hpp"
#include "nvs/errors.hpp"
#include "nvs/grid.hpp"
#include "nvs/image_io.hpp"
#include "nvs/ply_io.hpp"
#include "nvs/solver_params.hpp"

namespace nvs {

struct ViewStream {
  std::vector<Grid<Color>> frames;  // RGB in [0,1]
  std::vector<CameraPose> poses;
};

struct FrameSet {
  std::vector<ViewStream> views;
  int width = 0;
  int height = 0;
  int num_views() const { return static_cast<int>(views.size()); }
  int num_frames() const { return views.empty() ? 0 : static_cast<int>(views[0].frames.size()); }
};

struct TimestepPointCloud {
  int time_index = 0;
  std::vector<ColoredPoint> points;
};

struct CameraPath {
  std::vector<CameraPose> poses;
};

struct RenderedFrame {
  Grid<Color> color;
  Grid<double> depth;
  int time_index = 0;
};

namespace detail {

inline std::string fmt_index(const char* pattern, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, i);
  return buf;
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw BadHeader("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace detail

inline std::string view_dir_name(int s) { return detail::fmt_index("view_%02d", s); }
inline std::string frame_file_name(int t) { return detail::fmt_index("frame_%05d.png", t); }
inline std::string depth_file_name(int t) { return detail::fmt_index("depth_%05d.pfm", t); }
inline std::string cloud_file_name(int t) { return detail::fmt_index("cloud_%05d.ply", t); }

// One JSON document per view: {"frames": [{"t", "K" (row-major 9), "R"
// (row-major 9), "C" (3)}, ...]}, sorted here by t which must run 0..T-1.
inline std::vector<CameraPose> load_cameras(const std::filesystem::path& path) {
  nlohmann::json j = detail::parse_json_file(path);
  if (!j.contains("frames") || !j["frames"].is_array())
    throw BadHeader("no \"frames\" array in " + path.string());
  std::vector<CameraPose> poses(j["frames"].size());
  std::vector<bool> seen(poses.size(), false);
  for (const auto& jf : j["frames"]) {
    try {
      int t = jf.at("t").get<int>();
      if (t < 0 || t >= static_cast<int>(poses.size()) || seen[t])
        throw BadHeader("frame indices not 0..T-1 in " + path.string());
      seen[t] = true;
      CameraPose& cam = poses[t];
      cam.time_index = t;
      auto k = jf.at("K").get<std::vector<double>>();
      auto r = jf.at("R").get<std::vector<double>>();
      auto c = jf.at("C").get<std::vector<double>>();
      if (k.size() != 9 || r.size() != 9 || c.size() != 3)
        throw BadHeader("bad K/R/C arity in " + path.string());
      for (int i = 0; i < 3; ++i)
        for (int jj = 0; jj < 3; ++jj) {
          cam.intrinsics(i, jj) = k[i * 3 + jj];
          cam.rotation(i, jj) = r[i * 3 + jj];
        }
      cam.center = {c[0], c[1], c[2]};
      if (!is_valid_pose(cam))
        throw BadHeader("invalid pose at t=" + std::to_string(t) + " in " + path.string());
    } catch (const nlohmann::json::exception& e) {
      throw BadHeader("malformed frame entry in " + path.string() + ": " + e.what());
    }
  }
  return poses;
}

inline void save_cameras(const std::vector<CameraPose>& poses,
                         const std::filesystem::path& path) {
  nlohmann::json frames = nlohmann::json::array();
  for (size_t t = 0; t < poses.size(); ++t) {
    const CameraPose& cam = poses[t];
    nlohmann::json jf;
    jf["t"] = static_cast<int>(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        jf["K"][i * 3 + j] = cam.intrinsics(i, j);
        jf["R"][i * 3 + j] = cam.rotation(i, j);
      }
    jf["C"] = {cam.center.x(), cam.center.y(), cam.center.z()};
    frames.push_back(std::move(jf));
  }
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << nlohmann::json{{"frames", std::move(frames)}}.dump(1) << "\n";
  if (!out) throw IoFailure("short write to " + path.string());
}

inline CameraPath load_path(const std::filesystem::path& path) {
  return {load_cameras(path)};
}

inline std::pair<FrameSet, std::vector<TimestepPointCloud>> load_dataset(
    const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root / "views"))
    throw MissingFile("no views/ directory under " + root.string());

  FrameSet set;
  for (int s = 0;; ++s) {
    fs::path vdir = root / "views" / view_dir_name(s);
    if (!fs::is_directory(vdir)) break;
    ViewStream view;

    int frame_count = 0;
    while (fs::exists(vdir / frame_file_name(frame_count))) ++frame_count;

    fs::path cam_file = vdir / "cameras.json";
    if (fs::exists(cam_file)) view.poses = load_cameras(cam_file);
    if (static_cast<int>(view.poses.size()) != frame_count)
      throw PoseCountMismatch(view_dir_name(s) + " has " + std::to_string(view.poses.size()) +
                              " poses for " + std::to_string(frame_count) + " frames");
    for (int t = 0; t < frame_count; ++t) {
      view.poses[t].view_index = s;
      fs::path file = vdir / frame_file_name(t);
      Grid<Color> img = load_image(file);
      if (set.width == 0) {
        set.width = img.width();
        set.height = img.height();
      } else if (!img.same_size(set.width, set.height)) {
        throw ResolutionMismatch(file.string() + " is " + std::to_string(img.width()) + "x" +
                                 std::to_string(img.height()) + ", expected " +
                                 std::to_string(set.width) + "x" + std::to_string(set.height));
      }
      view.frames.push_back(std::move(img));
    }
    set.views.push_back(std::move(view));
  }

  if (set.num_views() < 2)
    throw BadHeader("dataset at " + root.string() + " has " + std::to_string(set.num_views()) +
                    " views; need at least 2");
  const int t_count = set.num_frames();
  if (t_count < 1) throw BadHeader("dataset at " + root.string() + " has no frames");
  for (int s = 1; s < set.num_views(); ++s)
    if (static_cast<int>(set.views[s].frames.size()) != t_count)
      throw PoseCountMismatch(view_dir_name(s) + " has " +
                              std::to_string(set.views[s].frames.size()) + " frames, view_00 has " +
                              std::to_string(t_count));

  std::vector<TimestepPointCloud> clouds(t_count);
  for (int t = 0; t < t_count; ++t) {
    fs::path file = root / "clouds" / cloud_file_name(t);
    if (!fs::exists(file)) throw MissingFile("missing point cloud " + file.string());
    clouds[t].time_index = t;
    clouds[t].points = load_ply(file);
  }
  return {std::move(set), std::move(clouds)};
}

inline SolverParams load_config(const std::filesystem::path& path) {
  nlohmann::json j = detail::parse_json_file(path);
  SolverParams p;
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) {
      try {
        dst = j.at(key).get<std::remove_reference_t<decltype(dst)>>();
      } catch (const nlohmann::json::exception&) {
        throw BadHeader(std::string("bad value for \"") + key + "\" in " + path.string());
      }
    }
  };
  get("lambda_pc", p.lambda_pc);
  get("lambda_t", p.lambda_t);
  get("lambda_p", p.lambda_p);
  get("lambda_g", p.lambda_g);
  get("sigma", p.sigma);
  get("ranking_sigma", p.ranking_sigma);
  get("views", p.n_views);
  get("pyramid_levels", p.pyramid_levels);
  get("outer_iters", p.outer_iters);
  get("inner_iters", p.inner_iters);
  get("cg_tolerance", p.cg_tolerance);
  get("kappa", p.kappa);
  get("smoothing_window_sigma", p.smoothing_window_sigma);
  if (p.lambda_pc < 0 || p.lambda_t < 0 || p.lambda_p < 0 || p.lambda_g < 0 || p.sigma <= 0 ||
      p.ranking_sigma <= 0 || p.n_views < 1 || p.pyramid_levels < 1)
    throw BadHeader("config violates parameter bounds: " + path.string());
  return p;
}

inline void save_config(const SolverParams& p, const std::filesystem::path& path) {
  nlohmann::json j{{"lambda_pc", p.lambda_pc},
                   {"lambda_t", p.lambda_t},
                   {"lambda_p", p.lambda_p},
                   {"lambda_g", p.lambda_g},
                   {"sigma", p.sigma},
                   {"ranking_sigma", p.ranking_sigma},
                   {"views", p.n_views},
                   {"pyramid_levels", p.pyramid_levels},
                   {"outer_iters", p.outer_iters},
                   {"inner_iters", p.inner_iters},
                   {"cg_tolerance", p.cg_tolerance},
                   {"kappa", p.kappa},
                   {"smoothing_window_sigma", p.smoothing_window_sigma}};
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << j.dump(1) << "\n";
  if (!out) throw IoFailure("short write to " + path.string());
}

inline void save_frame(const RenderedFrame& frame, const std::filesystem::path& dir) {
  save_image(frame.color, dir / frame_file_name(frame.time_index));
  save_depth(frame.depth, dir / depth_file_name(frame.time_index));
}

}  // namespace nvs
