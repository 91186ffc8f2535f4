#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "nvs/camera.hpp"
#include "nvs/grid.hpp"
#include "nvs/random.hpp"
#include "nvs/warp.hpp"

using namespace nvs;

namespace {

CameraPose test_camera(double f = 100.0, double cx = 80.0, double cy = 60.0) {
  CameraPose cam;
  cam.intrinsics << f, 0, cx, 0, f, cy, 0, 0, 1;
  cam.rotation.setIdentity();
  cam.center.setZero();
  return cam;
}

CameraPose random_camera(Rng& rng) {
  CameraPose cam;
  double fx = rng.uniform(80.0, 150.0);
  double fy = rng.uniform(80.0, 150.0);
  double sk = rng.uniform(-5.0, 5.0);
  double cx = rng.uniform(60.0, 100.0);
  double cy = rng.uniform(40.0, 80.0);
  cam.intrinsics << fx, sk, cx, 0, fy, cy, 0, 0, 1;
  cam.rotation = rng.rotation();
  cam.center = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
  return cam;
}

Color plane_texture(double x, double y) {
  return Color(0.5 + 0.35 * std::sin(1.3 * x), 0.5 + 0.35 * std::sin(1.7 * y + 0.4),
               0.5 + 0.25 * std::sin(1.1 * (x + y)));
}

// Analytic render of the textured plane z = plane_z. Depth values follow the
// same parameterization as unproject (camera-frame z).
Grid<Color> render_plane(const CameraPose& cam, double plane_z, int w, int h,
                         Grid<double>* depth_out = nullptr) {
  Grid<Color> img(w, h, Color::Zero());
  if (depth_out) *depth_out = Grid<double>(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Eigen::Vector3d along =
          unproject(cam, {{static_cast<double>(x), static_cast<double>(y)}, 1.0}) - cam.center;
      REQUIRE(along.z() > 1e-9);
      double d = (plane_z - cam.center.z()) / along.z();
      Eigen::Vector3d p = cam.center + d * along;
      img(x, y) = plane_texture(p.x(), p.y());
      if (depth_out) (*depth_out)(x, y) = d;
    }
  }
  return img;
}

}  // namespace

TEST_CASE("project: pinhole examples") {
  CameraPose cam = test_camera();
  auto on_axis = project(cam, {0, 0, 1});
  REQUIRE(on_axis.has_value());
  CHECK(on_axis->pixel.u == Catch::Approx(80.0).margin(1e-12));
  CHECK(on_axis->pixel.v == Catch::Approx(60.0).margin(1e-12));
  CHECK(on_axis->depth == Catch::Approx(1.0));

  auto off_axis = project(cam, {0.5, 0, 1});
  REQUIRE(off_axis.has_value());
  CHECK(off_axis->pixel.u == Catch::Approx(130.0).margin(1e-12));
  CHECK(off_axis->pixel.v == Catch::Approx(60.0).margin(1e-12));

  CHECK_FALSE(project(cam, {0, 0, -1}).has_value());
  CHECK_FALSE(project(cam, {0, 0, 0}).has_value());
}

TEST_CASE("unproject: examples") {
  CameraPose cam = test_camera();
  Eigen::Vector3d p = unproject(cam, {{80, 60}, 1.0});
  CHECK((p - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);

  CameraPose shifted = cam;
  shifted.center = {1, 0, 0};
  Eigen::Vector3d q = unproject(shifted, {{80, 60}, 2.0});
  CHECK((q - Eigen::Vector3d(1, 0, 2)).norm() < 1e-12);
}

TEST_CASE("project/unproject round-trip over random cameras") {
  Rng rng(20240811);
  double max_pix = 0.0, max_depth = 0.0;
  for (int i = 0; i < 10000; ++i) {
    CameraPose cam = random_camera(rng);
    DepthSample s{{rng.uniform(0.0, 160.0), rng.uniform(0.0, 120.0)}, rng.uniform(0.1, 50.0)};
    Eigen::Vector3d p = unproject(cam, s);
    auto proj = project(cam, p);
    REQUIRE(proj.has_value());
    max_pix = std::max({max_pix, std::abs(proj->pixel.u - s.pixel.u),
                        std::abs(proj->pixel.v - s.pixel.v)});
    max_depth = std::max(max_depth, std::abs(proj->depth - s.depth));
  }
  CHECK(max_pix < 1e-6);
  CHECK(max_depth < 1e-6);
}

TEST_CASE("angle-axis: examples and round-trips") {
  CHECK(rotation_to_angle_axis(Eigen::Matrix3d::Identity()).norm() < 1e-12);

  Eigen::Matrix3d rz = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  Eigen::Vector3d az = rotation_to_angle_axis(rz);
  CHECK((az - Eigen::Vector3d(0, 0, M_PI / 2)).norm() < 1e-9);

  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::Matrix3d r = rng.rotation();
    Eigen::Matrix3d back = angle_axis_to_rotation(rotation_to_angle_axis(r));
    worst = std::max(worst, (back - r).norm());
  }
  CHECK(worst < 1e-9);

  SECTION("angle-pi branch") {
    for (int i = 0; i < 200; ++i) {
      Eigen::Vector3d axis = rng.unit_vector();
      Eigen::Matrix3d r = Eigen::AngleAxisd(M_PI, axis).toRotationMatrix();
      Eigen::Matrix3d back = angle_axis_to_rotation(rotation_to_angle_axis(r));
      CHECK((back - r).norm() < 1e-7);
    }
  }
  SECTION("tiny angles") {
    for (int i = 0; i < 200; ++i) {
      Eigen::Vector3d a = rng.unit_vector() * rng.uniform(0.0, 1e-7);
      Eigen::Vector3d back = rotation_to_angle_axis(angle_axis_to_rotation(a));
      CHECK((back - a).norm() < 1e-12);
    }
  }
}

TEST_CASE("pose validation") {
  CameraPose cam = test_camera();
  CHECK(is_valid_pose(cam));
  CameraPose bad = cam;
  bad.rotation(0, 0) = 1.5;
  CHECK_FALSE(is_valid_pose(bad));
  CHECK_THROWS_AS(validate_pose(bad), std::invalid_argument);
  CameraPose lower = cam;
  lower.intrinsics(1, 0) = 0.1;
  CHECK_FALSE(is_valid_pose(lower));
}

TEST_CASE("scaled_camera halves pixel coordinates consistently") {
  Rng rng(99);
  CameraPose cam = random_camera(rng);
  CameraPose half = scaled_camera(cam, 0.5);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d p = unproject(cam, {{rng.uniform(0.0, 160.0), rng.uniform(0.0, 120.0)},
                                        rng.uniform(0.5, 10.0)});
    auto a = project(cam, p);
    auto b = project(half, p);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(b->pixel.u == Catch::Approx((a->pixel.u + 0.5) * 0.5 - 0.5).margin(1e-9));
    CHECK(b->pixel.v == Catch::Approx((a->pixel.v + 0.5) * 0.5 - 0.5).margin(1e-9));
    CHECK(b->depth == Catch::Approx(a->depth));
  }
}

TEST_CASE("splat_points: examples") {
  CameraPose cam = test_camera();
  SECTION("single point on the optical axis") {
    std::vector<ColoredPoint> pts{{{0, 0, 2}, Color(1, 0, 0)}};
    SplatMap m = splat_points(pts, cam, 160, 120);
    CHECK(m.occupied_count == 1);
    REQUIRE(m.occupancy(80, 60) == 1);
    CHECK(m.depth(80, 60) == Catch::Approx(2.0));
    CHECK(m.color(80, 60) == Color(1, 0, 0));
  }
  SECTION("z-order on collision") {
    std::vector<ColoredPoint> pts{{{0.001, 0, 3}, Color(0, 1, 0)}, {{-0.001, 0, 1}, Color(0, 0, 1)}};
    auto close = splat_points(pts, cam, 160, 120);
    // both round to the principal point at these depths
    CHECK(close.occupied_count == 1);
    CHECK(close.depth(80, 60) == Catch::Approx(1.0));
    CHECK(close.color(80, 60) == Color(0, 0, 1));
  }
  SECTION("empty cloud") {
    SplatMap m = splat_points(std::span<const ColoredPoint>{}, cam, 16, 12);
    CHECK(m.occupied_count == 0);
  }
}

TEST_CASE("splat_points matches a brute-force projection oracle") {
  Rng rng(1234);
  CameraPose cam = test_camera();
  std::vector<ColoredPoint> pts;
  for (int i = 0; i < 500; ++i) {
    ColoredPoint p;
    p.position = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(1.5, 2.5)};
    p.color = Color(rng.uniform(), rng.uniform(), rng.uniform());
    pts.push_back(p);
  }
  SplatMap m = splat_points(pts, cam, 160, 120);

  std::map<std::pair<int, int>, double> oracle;
  for (const auto& p : pts) {
    auto proj = project(cam, p.position);
    if (!proj) continue;
    int x = static_cast<int>(std::lround(proj->pixel.u));
    int y = static_cast<int>(std::lround(proj->pixel.v));
    if (x < 0 || x >= 160 || y < 0 || y >= 120) continue;
    auto key = std::make_pair(x, y);
    auto it = oracle.find(key);
    if (it == oracle.end() || proj->depth < it->second) oracle[key] = proj->depth;
  }
  CHECK(m.occupied_count == static_cast<int>(oracle.size()));
  for (const auto& [key, depth] : oracle) {
    REQUIRE(m.occupancy(key.first, key.second) == 1);
    CHECK(m.depth(key.first, key.second) == Catch::Approx(depth));
  }
}

TEST_CASE("warp_frame: identity warp reproduces the source") {
  CameraPose cam = test_camera();
  Grid<double> depth;
  Grid<Color> img = render_plane(cam, 4.0, 160, 120, &depth);
  WarpResult w = warp_frame(img, cam, cam, depth);
  double worst = 0.0;
  for (int y = 1; y < 119; ++y)
    for (int x = 1; x < 159; ++x) {
      REQUIRE(w.valid(x, y) == 1);
      worst = std::max(worst, (w.color(x, y) - img(x, y)).cwiseAbs().maxCoeff());
    }
  CHECK(worst < 1e-6);
}

TEST_CASE("warp_frame matches analytic plane render across two cameras") {
  CameraPose src = test_camera();
  CameraPose dst = test_camera();
  dst.center = {0.4, -0.25, 0.1};
  dst.rotation = Eigen::AngleAxisd(0.05, Eigen::Vector3d(0.2, 1.0, 0.1).normalized())
                     .toRotationMatrix();

  Grid<Color> src_img = render_plane(src, 5.0, 160, 120);
  Grid<double> dst_depth;
  Grid<Color> dst_img = render_plane(dst, 5.0, 160, 120, &dst_depth);

  WarpResult w = warp_frame(src_img, src, dst, dst_depth);
  double worst = 0.0;
  int valid = 0;
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x) {
      if (!w.valid(x, y)) continue;
      ++valid;
      worst = std::max(worst, (w.color(x, y) - dst_img(x, y)).cwiseAbs().maxCoeff());
    }
  CHECK(valid > 0.5 * 160 * 120);
  CHECK(worst < 0.02);
}

TEST_CASE("warp_frame at near-infinite depth approaches the rotation homography") {
  CameraPose src = test_camera();
  CameraPose dst = test_camera();
  dst.center = {0.3, -0.2, 0.1};
  dst.rotation = Eigen::AngleAxisd(0.08, Eigen::Vector3d(0, 1, 0)).toRotationMatrix();

  Grid<Color> src_img = render_plane(src, 5.0, 160, 120);  // any smooth texture
  Grid<double> far(160, 120, 1e7);
  WarpResult w = warp_frame(src_img, src, dst, far);

  Eigen::Matrix3d h = src.intrinsics * src.rotation * dst.rotation.transpose() *
                      dst.intrinsics.inverse();
  double worst = 0.0;
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x) {
      if (!w.valid(x, y)) continue;
      Eigen::Vector3d m = h * Eigen::Vector3d(x, y, 1);
      double u = m.x() / m.z(), v = m.y() / m.z();
      if (!bilinear_in_bounds(160, 120, u, v)) continue;
      Color expect = sample_bilinear(src_img, u, v);
      worst = std::max(worst, (w.color(x, y) - expect).cwiseAbs().maxCoeff());
    }
  CHECK(worst < 1e-3);
}

TEST_CASE("visibility_map: fronto-parallel plane is fully visible") {
  CameraPose dst = test_camera();
  CameraPose src = test_camera();
  src.center = {0.5, 0, 0};
  Grid<double> depth(160, 120, 3.0);
  Mask vis = visibility_map(dst, depth, src, 160, 120);
  for (int y = 0; y < 120; ++y)
    for (int x = 0; x < 160; ++x) {
      Eigen::Vector3d p = unproject(dst, {{static_cast<double>(x), static_cast<double>(y)}, 3.0});
      auto proj = project(src, p);
      bool in = proj && std::lround(proj->pixel.u) >= 0 && std::lround(proj->pixel.u) < 160 &&
                std::lround(proj->pixel.v) >= 0 && std::lround(proj->pixel.v) < 120;
      CHECK(vis(x, y) == (in ? 1 : 0));
    }
}

TEST_CASE("visibility_map agrees with a brute-force z-buffer oracle") {
  CameraPose dst = test_camera(60.0, 32.0, 24.0);
  CameraPose src = dst;
  src.center = {0.6, 0, 0};
  const int w = 64, h = 48;
  // far plane with a near patch floating in the middle
  Grid<double> depth(w, h, 8.0);
  for (int y = 16; y < 32; ++y)
    for (int x = 24; x < 40; ++x) depth(x, y) = 2.0;

  Mask vis = visibility_map(dst, depth, src, w, h);

  // independent recomputation, quadratic scan
  auto src_hit = [&](int x, int y) -> std::pair<long, double> {
    Eigen::Vector3d p = unproject(dst, {{static_cast<double>(x), static_cast<double>(y)},
                                        depth(x, y)});
    auto proj = project(src, p);
    if (!proj) return {-1, 0.0};
    long sx = std::lround(proj->pixel.u), sy = std::lround(proj->pixel.v);
    if (sx < 0 || sx >= w || sy < 0 || sy >= h) return {-1, 0.0};
    return {sy * w + sx, proj->depth};
  };
  double dmin = 1e300, dmax = -1e300;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto [sp, d] = src_hit(x, y);
      if (sp < 0) continue;
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  double eps_z = 1e-4 * (dmax - dmin) + 1e-12;
  int occluded = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto [sp, d] = src_hit(x, y);
      if (sp < 0) {
        CHECK(vis(x, y) == 0);
        continue;
      }
      double best = 1e300;
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          auto [osp, od] = src_hit(xx, yy);
          if (osp == sp && od < best) best = od;
        }
      bool expect = d <= best + eps_z;
      CHECK(vis(x, y) == (expect ? 1 : 0));
      if (!expect) ++occluded;
    }
  CHECK(occluded > 50);  // the fixture actually exercises occlusion
}

TEST_CASE("geometry is invariant under a global rigid transform") {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    CameraPose cam = random_camera(rng);
    Eigen::Matrix3d rg = rng.rotation();
    Eigen::Vector3d tg{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};

    CameraPose moved = cam;
    moved.rotation = cam.rotation * rg.transpose();
    moved.center = rg * cam.center + tg;

    Eigen::Vector3d p{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
    Eigen::Vector3d moved_p = rg * p + tg;

    auto a = project(cam, p);
    auto b = project(moved, moved_p);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      CHECK(std::abs(a->pixel.u - b->pixel.u) < 1e-6);
      CHECK(std::abs(a->pixel.v - b->pixel.v) < 1e-6);
      CHECK(std::abs(a->depth - b->depth) < 1e-6);
    }
  }
}
