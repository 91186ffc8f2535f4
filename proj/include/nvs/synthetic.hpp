#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nvs/camera.hpp"
#include "nvs/dataset.hpp"
#include "nvs/errors.hpp"
#include "nvs/grid.hpp"
#include "nvs/random.hpp"
#include "nvs/solver_params.hpp"
#include "nvs/warp.hpp"

namespace nvs {

// everything the generator needs; defaults give the standard desk-scale
// fixture (192x128, 5 views on a 60 degree arc, 10 frames)
struct SceneSpec {
  int width = 192;
  int height = 128;
  int views = 5;
  int frames = 10;
  double rho = 0.05;          // per-pixel sampling probability per input view
  double sigma_d = 0.0;       // gaussian depth noise, world units
  double outliers = 0.0;      // fraction of samples with gross depth error
  double box_motion = 1.0;    // scales the box travel; 0 freezes the scene
  double path_motion = 1.0;   // scales the virtual-camera sweep; 0 holds it still
  double arc_degrees = 60.0;  // total input-camera baseline
};

inline SceneSpec load_scene_spec(const std::filesystem::path& path) {
  nlohmann::json j = detail::parse_json_file(path);
  SceneSpec s;
  auto get = [&](const char* key, auto& dst) {
    if (j.contains(key)) {
      try {
        dst = j.at(key).get<std::remove_reference_t<decltype(dst)>>();
      } catch (const nlohmann::json::exception&) {
        throw BadHeader(std::string("bad value for \"") + key + "\" in " + path.string());
      }
    }
  };
  get("width", s.width);
  get("height", s.height);
  get("views", s.views);
  get("frames", s.frames);
  get("rho", s.rho);
  get("sigma_d", s.sigma_d);
  get("outliers", s.outliers);
  get("box_motion", s.box_motion);
  get("path_motion", s.path_motion);
  get("arc_degrees", s.arc_degrees);
  if (s.width < 16 || s.height < 16 || s.views < 2 || s.frames < 1 || s.rho <= 0.0 ||
      s.rho > 1.0 || s.sigma_d < 0.0 || s.outliers < 0.0 || s.outliers >= 1.0)
    throw BadHeader("scene spec violates parameter bounds: " + path.string());
  return s;
}

// textured back wall and floor with a textured box sliding sideways between
// them; all geometry is analytic so ground truth is exact
struct SyntheticScene {
  int frames = 10;
  double box_travel = 1.0;
  double wall_z = 4.2;
  double floor_y = 1.1;
  Eigen::Vector3d box_half{0.3, 0.3, 0.3};

  explicit SyntheticScene(const SceneSpec& spec = {})
      : frames(spec.frames), box_travel(spec.box_motion) {}

  Eigen::Vector3d box_center(int t) const {
    double tau = frames > 1 ? static_cast<double>(t) / (frames - 1) : 0.0;
    return {box_travel * (-0.8 + 1.6 * tau), 0.45, 2.6};
  }

  // Each surface mixes a broad color ramp with a mid-frequency component
  // (roughly 10-20 px wavelength at the default fixture resolution) so image
  // gradients stay in a photograph-like range instead of degenerating to
  // flat fields.
  Color wall_color(const Eigen::Vector3d& p) const {
    return Color(0.5 + 0.2 * std::sin(2.1 * p.x() + 0.3) + 0.14 * std::sin(19.0 * (p.x() + 0.6 * p.y())),
                 0.45 + 0.2 * std::sin(1.7 * p.y()) + 0.12 * std::sin(23.0 * (p.x() - p.y()) + 1.1),
                 0.5 + 0.22 * std::sin(1.3 * (p.x() + p.y())) + 0.1 * std::sin(27.0 * p.x() + 2.0));
  }
  // The floor is seen at a grazing angle, so its detail runs mostly along x
  // (depth compression would alias anything fine along z near the horizon),
  // with the three channels phased apart so their gradients never vanish
  // together over a whole band.
  Color floor_color(const Eigen::Vector3d& p) const {
    return Color(0.44 + 0.2 * std::sin(3.1 * p.x()) + 0.2 * std::sin(11.0 * p.x() + 2.0 * p.z()),
                 0.4 + 0.16 * std::sin(2.3 * p.z()) + 0.18 * std::sin(13.0 * p.x() - 3.0 * p.z() + 0.7),
                 0.34 + 0.16 * std::sin(1.9 * (p.x() - p.z())) + 0.16 * std::sin(9.0 * p.x() + 4.0 * p.z() + 1.6));
  }
  Color box_color(const Eigen::Vector3d& p) const {
    return Color(0.68 + 0.14 * std::sin(9.0 * (p.x() + p.y())) + 0.12 * std::sin(33.0 * p.y()),
                 0.38 + 0.14 * std::sin(11.0 * p.y()) + 0.11 * std::sin(29.0 * (p.x() + p.z())),
                 0.22 + 0.1 * std::sin(7.0 * p.z()) + 0.09 * std::sin(35.0 * p.x() + 0.9));
  }

  // camera-frame depth and color along the pixel ray; depth 0 where nothing
  // is hit (rays pointing away from the scene)
  std::pair<double, Color> trace(const CameraPose& cam, double u, double v, int t) const {
    Eigen::Vector3d dir = unproject(cam, {{u, v}, 1.0}) - cam.center;
    double best = 0.0;
    int hit = -1;  // 0 wall, 1 floor, 2 box
    auto consider = [&](double d, int what) {
      if (d > 1e-9 && (best == 0.0 || d < best)) {
        best = d;
        hit = what;
      }
    };
    if (std::abs(dir.z()) > 1e-12) {
      double d = (wall_z - cam.center.z()) / dir.z();
      if (d > 0.0) consider(d, 0);
    }
    if (std::abs(dir.y()) > 1e-12) {
      double d = (floor_y - cam.center.y()) / dir.y();
      if (d > 0.0 && cam.center.z() + d * dir.z() <= wall_z) consider(d, 1);
    }
    {
      Eigen::Vector3d c = box_center(t);
      double t_near = -1e300, t_far = 1e300;
      bool miss = false;
      for (int a = 0; a < 3 && !miss; ++a) {
        double lo = c[a] - box_half[a], hi = c[a] + box_half[a];
        if (std::abs(dir[a]) < 1e-12) {
          miss = cam.center[a] < lo || cam.center[a] > hi;
        } else {
          double t0 = (lo - cam.center[a]) / dir[a];
          double t1 = (hi - cam.center[a]) / dir[a];
          if (t0 > t1) std::swap(t0, t1);
          t_near = std::max(t_near, t0);
          t_far = std::min(t_far, t1);
        }
      }
      if (!miss && t_near <= t_far && t_near > 0.0) consider(t_near, 2);
    }
    if (hit < 0) return {0.0, Color::Zero()};
    Eigen::Vector3d p = cam.center + best * dir;
    Color c = hit == 0 ? wall_color(p) : hit == 1 ? floor_color(p) : box_color(p);
    return {best, c};
  }

  void render(const CameraPose& cam, int w, int h, int t, Grid<double>& depth,
              Grid<Color>& img) const {
    depth = Grid<double>(w, h, 0.0);
    img = Grid<Color>(w, h, Color::Zero());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        auto [d, c] = trace(cam, x, y, t);
        depth(x, y) = d;
        img(x, y) = c;
      }
  }
};

namespace detail {

inline CameraPose look_at_camera(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                                 int w, int h, double f_scale = 0.75) {
  CameraPose cam;
  double f = f_scale * w;
  cam.intrinsics << f, 0, (w - 1) / 2.0, 0, f, (h - 1) / 2.0, 0, 0, 1;
  Eigen::Vector3d fwd = (target - center).normalized();
  Eigen::Vector3d down(0, 1, 0);  // +y is down throughout
  Eigen::Vector3d right = down.cross(fwd).normalized();
  Eigen::Vector3d ydir = fwd.cross(right);
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = ydir;
  cam.rotation.row(2) = fwd;
  cam.center = center;
  return cam;
}

// one independent stream per (seed, timestep, view); splitmix64 so nearby
// keys decorrelate
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t t, std::uint64_t s) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (t * 1024 + s + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

inline const Eigen::Vector3d kScenePivot{0.0, 0.3, 2.8};

inline std::vector<CameraPose> make_input_cameras(const SceneSpec& spec) {
  std::vector<CameraPose> cams;
  const double arc = spec.arc_degrees * M_PI / 180.0;
  for (int s = 0; s < spec.views; ++s) {
    double a = spec.views > 1 ? arc * (static_cast<double>(s) / (spec.views - 1) - 0.5) : 0.0;
    Eigen::Vector3d c = kScenePivot - 2.8 * Eigen::Vector3d(std::sin(a), 0.0, std::cos(a));
    // wider lens than the virtual path, so the rendered view stays inside the
    // captured frustum everywhere (the usual capture-wide / render-tight setup)
    cams.push_back(detail::look_at_camera(c, kScenePivot, spec.width, spec.height, 0.7));
    cams.back().view_index = s;
  }
  return cams;
}

// Held-out path: a shallower arc well inside the capture ring and slightly
// above it, so every rendered pose needs genuine parallax extrapolation
// instead of degenerating into a re-crop of the nearest input photo.
inline CameraPath make_virtual_path(const SceneSpec& spec) {
  CameraPath path;
  const double arc = spec.arc_degrees * M_PI / 180.0;
  for (int t = 0; t < spec.frames; ++t) {
    double tau = spec.frames > 1 ? static_cast<double>(t) / (spec.frames - 1) : 0.5;
    double a = arc * 0.25 * (2.0 * tau - 1.0) * spec.path_motion;
    Eigen::Vector3d c = kScenePivot - 2.3 * Eigen::Vector3d(std::sin(a), 0.0, std::cos(a));
    c.y() -= 0.15;
    path.poses.push_back(detail::look_at_camera(c, kScenePivot, spec.width, spec.height, 0.8));
    path.poses.back().time_index = t;
  }
  return path;
}

// sparse noisy surface samples seen from one camera at one timestep. Samples
// sit on integer pixel centers, so noiseless points splat back onto the exact
// ray depth.
inline std::vector<ColoredPoint> sample_view_points(const SyntheticScene& scene,
                                                    const CameraPose& cam, int t,
                                                    const SceneSpec& spec, Rng& rng) {
  std::vector<ColoredPoint> pts;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      if (rng.uniform() >= spec.rho) continue;
      auto [d, c] = scene.trace(cam, x, y, t);
      if (d <= 0.0) continue;
      double noisy = d;
      if (spec.outliers > 0.0 && rng.uniform() < spec.outliers)
        noisy = d * rng.uniform(0.5, 1.5);
      else if (spec.sigma_d > 0.0)
        noisy = d + spec.sigma_d * rng.normal();
      noisy = std::max(noisy, 0.05);
      pts.push_back({unproject(cam, {{static_cast<double>(x), static_cast<double>(y)}, noisy}), c});
    }
  return pts;
}

// writes the full dataset layout plus gt/ renders of the virtual path and a
// config.json sized for the fixture resolution
inline void generate_synthetic(const SceneSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root / "views", ec);
  fs::create_directories(root / "clouds", ec);
  fs::create_directories(root / "path", ec);
  fs::create_directories(root / "gt", ec);
  if (ec) throw IoFailure("cannot create dataset directories under " + root.string());

  SyntheticScene scene(spec);
  std::vector<CameraPose> cams = make_input_cameras(spec);
  CameraPath path = make_virtual_path(spec);

  for (int s = 0; s < spec.views; ++s) {
    fs::path vdir = root / "views" / view_dir_name(s);
    fs::create_directories(vdir, ec);
    std::vector<CameraPose> poses(spec.frames, cams[s]);
    for (int t = 0; t < spec.frames; ++t) {
      poses[t].time_index = t;
      Grid<double> depth;
      Grid<Color> img;
      scene.render(cams[s], spec.width, spec.height, t, depth, img);
      save_image(img, vdir / frame_file_name(t));
    }
    save_cameras(poses, vdir / "cameras.json");
  }

  for (int t = 0; t < spec.frames; ++t) {
    std::vector<ColoredPoint> cloud;
    for (int s = 0; s < spec.views; ++s) {
      Rng rng(detail::mix_seed(seed, t, s));
      std::vector<ColoredPoint> pts = sample_view_points(scene, cams[s], t, spec, rng);
      cloud.insert(cloud.end(), pts.begin(), pts.end());
    }
    save_ply(cloud, root / "clouds" / cloud_file_name(t));
  }

  save_cameras(path.poses, root / "path" / "cameras.json");

  for (int t = 0; t < spec.frames; ++t) {
    Grid<double> depth;
    Grid<Color> img;
    scene.render(path.poses[t], spec.width, spec.height, t, depth, img);
    save_image(img, root / "gt" / frame_file_name(t));
    save_depth(depth, root / "gt" / depth_file_name(t));
  }

  SolverParams params;
  // as many levels as keep the coarsest level at least 8px on its short side
  // (192x128 gives 5, bottoming out at 12x8)
  int levels = 1;
  while (std::min(spec.width, spec.height) >> levels >= 8) ++levels;
  params.pyramid_levels = levels;
  // At desk scale the splat covers a fifth of the pixels and the baselines are
  // fractions of a unit, so the sparse-depth attachment has to be far stiffer
  // than on capture-scale footage for the samples to anchor the solution.
  params.lambda_pc = 200.0;
  save_config(params, root / "config.json");
}

}  // namespace nvs
