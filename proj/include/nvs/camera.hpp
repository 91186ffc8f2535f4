#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace nvs {

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

struct DepthSample {
  Pixel pixel;
  double depth = 0.0;  // distance along the camera z-axis, > 0
};

// Pinhole camera: world point p maps to K * R * (p - C). The view_index is
// -1 for the virtual camera.
struct CameraPose {
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  int time_index = 0;
  int view_index = -1;
};

inline bool is_valid_pose(const CameraPose& cam, double tol = 1e-9) {
  const Eigen::Matrix3d& k = cam.intrinsics;
  if (!(k(0, 0) > 0.0) || !(k(1, 1) > 0.0)) return false;
  if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0) return false;
  Eigen::Matrix3d rtr = cam.rotation.transpose() * cam.rotation;
  if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(cam.rotation.determinant() - 1.0) > tol) return false;
  return cam.center.allFinite() && k.allFinite();
}

inline void validate_pose(const CameraPose& cam) {
  if (!is_valid_pose(cam)) throw std::invalid_argument("invalid camera pose");
}

struct Projection {
  Pixel pixel;
  double depth = 0.0;
};

// Perspective projection; empty when the point is not in front of the camera.
inline std::optional<Projection> project(const CameraPose& cam, const Eigen::Vector3d& p) {
  Eigen::Vector3d pc = cam.rotation * (p - cam.center);
  if (!(pc.z() > 0.0)) return std::nullopt;
  Eigen::Vector3d h = cam.intrinsics * pc;
  Projection out;
  out.pixel.u = h.x() / h.z();
  out.pixel.v = h.y() / h.z();
  out.depth = pc.z();
  return out;
}

inline Eigen::Vector3d unproject(const CameraPose& cam, const DepthSample& s) {
  const Eigen::Matrix3d& k = cam.intrinsics;
  // back-substitution for upper-triangular K
  double z = 1.0 / k(2, 2);
  double y = (s.pixel.v - k(1, 2) * z) / k(1, 1);
  double x = (s.pixel.u - k(0, 1) * y - k(0, 2) * z) / k(0, 0);
  Eigen::Vector3d dir(x, y, z);
  Eigen::Vector3d pc = dir * (s.depth / dir.z());
  return cam.rotation.transpose() * pc + cam.center;
}

// Angle-axis vector: direction is the rotation axis, magnitude the angle in
// radians. The angle-pi branch extracts the axis from the symmetric part.
inline Eigen::Vector3d rotation_to_angle_axis(const Eigen::Matrix3d& r) {
  double cos_theta = (r.trace() - 1.0) * 0.5;
  cos_theta = std::clamp(cos_theta, -1.0, 1.0);
  double theta = std::acos(cos_theta);
  Eigen::Vector3d vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < 1e-7) {
    return 0.5 * vee;  // first order: vee = 2 sin(theta) * axis
  }
  double sin_theta = std::sin(theta);
  if (sin_theta > 1e-6) {
    return (theta / (2.0 * sin_theta)) * vee;
  }
  // theta near pi: (R + I)/2 = axis * axis^T at exactly pi
  Eigen::Matrix3d b = 0.5 * (r + Eigen::Matrix3d::Identity());
  int k = 0;
  if (b(1, 1) > b(k, k)) k = 1;
  if (b(2, 2) > b(k, k)) k = 2;
  Eigen::Vector3d axis;
  axis[k] = std::sqrt(std::max(b(k, k), 0.0));
  for (int i = 0; i < 3; ++i) {
    if (i != k) axis[i] = b(i, k) / axis[k];
  }
  axis.normalize();
  if (axis.dot(vee) < 0.0) axis = -axis;
  return theta * axis;
}

inline Eigen::Matrix3d angle_axis_to_rotation(const Eigen::Vector3d& a) {
  double theta = a.norm();
  Eigen::Matrix3d skew;
  skew << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() + skew + 0.5 * skew * skew;
  }
  double s = std::sin(theta) / theta;
  double c = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + s * skew + c * skew * skew;
}

// Camera viewing the same scene at `scale` times the resolution. Follows the
// pixel-center convention: full-res coordinate u maps to (u + 0.5) * s - 0.5.
inline CameraPose scaled_camera(const CameraPose& cam, double scale) {
  CameraPose out = cam;
  out.intrinsics(0, 0) *= scale;
  out.intrinsics(1, 1) *= scale;
  out.intrinsics(0, 1) *= scale;
  out.intrinsics(0, 2) = (cam.intrinsics(0, 2) + 0.5) * scale - 0.5;
  out.intrinsics(1, 2) = (cam.intrinsics(1, 2) + 0.5) * scale - 0.5;
  return out;
}

}  // namespace nvs
