#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "nvs/camera.hpp"
#include "nvs/errors.hpp"

namespace nvs {

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrajectoryProblem {
  std::vector<CameraPose> observed;
  std::vector<std::pair<int, CameraPose>> anchors;  // (index, pose) held fixed
  double window_sigma = 1.5;
  double data_weight = 1.0;
};

inline constexpr int kSmoothingWindow = 3;

inline double window_weight(int dt, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::exp(-(static_cast<double>(dt) * dt) / (2.0 * sigma * sigma));
}

namespace detail {

// nearest 2pi-branch of the angle-axis of rot relative to ref
inline Eigen::Vector3d branch_matched_angle_axis(const Eigen::Matrix3d& rot,
                                                 const Eigen::Vector3d& ref) {
  Eigen::Vector3d a = rotation_to_angle_axis(rot);
  double theta = a.norm();
  Eigen::Vector3d best = a;
  double best_d = (a - ref).squaredNorm();
  if (theta > 1e-12) {
    Eigen::Vector3d axis = a / theta;
    for (double alt : {theta - 2.0 * M_PI, theta + 2.0 * M_PI}) {
      Eigen::Vector3d cand = axis * alt;
      double d = (cand - ref).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = cand;
      }
    }
  }
  return best;
}

}  // namespace detail

// Continuous angle-axis chart along a pose sequence: each vector picks the
// 2pi-branch nearest its predecessor, so within-window differences never see a
// wrap jump.
inline std::vector<Eigen::Vector3d> unwrap_angle_axis(const std::vector<CameraPose>& poses) {
  std::vector<Eigen::Vector3d> out(poses.size());
  Eigen::Vector3d prev = Eigen::Vector3d::Zero();
  for (size_t t = 0; t < poses.size(); ++t) {
    out[t] = t == 0 ? rotation_to_angle_axis(poses[t].rotation)
                    : detail::branch_matched_angle_axis(poses[t].rotation, prev);
    prev = out[t];
  }
  return out;
}

// The quadratic being minimized, evaluated in the observed trajectory's
// angle-axis chart. Anchored indices contribute through the smoothness terms
// only (their own variables are fixed).
inline double smoothing_objective(const TrajectoryProblem& p,
                                  const std::vector<CameraPose>& estimate) {
  const int t_count = static_cast<int>(p.observed.size());
  if (static_cast<int>(estimate.size()) != t_count)
    throw LengthMismatch("estimate length differs from observed");
  std::vector<Eigen::Vector3d> a_obs = unwrap_angle_axis(p.observed);
  std::vector<Eigen::Vector3d> a_est(estimate.size());
  for (int t = 0; t < t_count; ++t)
    a_est[t] = detail::branch_matched_angle_axis(estimate[t].rotation, a_obs[t]);

  double e = 0.0;
  for (int t = 0; t < t_count; ++t) {
    e += p.data_weight * ((estimate[t].center - p.observed[t].center).squaredNorm() +
                          (a_est[t] - a_obs[t]).squaredNorm());
    for (int dt = -kSmoothingWindow; dt <= kSmoothingWindow; ++dt) {
      int u = t + dt;
      if (dt == 0 || u < 0 || u >= t_count) continue;
      e += window_weight(dt, p.window_sigma) *
           ((estimate[t].center - estimate[u].center).squaredNorm() +
            (a_est[t] - a_est[u]).squaredNorm());
    }
  }
  return e;
}

inline std::vector<CameraPose> smooth_trajectory(const TrajectoryProblem& p) {
  const int t_count = static_cast<int>(p.observed.size());
  if (t_count < 2) throw std::invalid_argument("trajectory needs at least 2 poses");
  if (p.data_weight < 0.0) throw std::invalid_argument("negative data_weight");

  std::vector<Eigen::Vector3d> a_obs = unwrap_angle_axis(p.observed);

  std::vector<int> anchor_of(t_count, -1);
  for (size_t i = 0; i < p.anchors.size(); ++i) {
    int idx = p.anchors[i].first;
    if (idx < 0 || idx >= t_count) throw std::invalid_argument("anchor index out of range");
    anchor_of[idx] = static_cast<int>(i);
  }
  if (p.data_weight == 0.0 && p.anchors.empty())
    throw SingularSystem("no data term and no anchors");

  // fixed values per index (anchored) in the observed chart
  std::vector<Eigen::Vector3d> fixed_c(t_count), fixed_a(t_count);
  for (int t = 0; t < t_count; ++t) {
    if (anchor_of[t] < 0) continue;
    const CameraPose& anchor = p.anchors[anchor_of[t]].second;
    fixed_c[t] = anchor.center;
    fixed_a[t] = detail::branch_matched_angle_axis(anchor.rotation, a_obs[t]);
  }

  std::vector<int> free_of(t_count, -1);
  std::vector<int> index_of;
  for (int t = 0; t < t_count; ++t)
    if (anchor_of[t] < 0) {
      free_of[t] = static_cast<int>(index_of.size());
      index_of.push_back(t);
    }
  const int n = static_cast<int>(index_of.size());

  std::vector<CameraPose> out = p.observed;
  for (int t = 0; t < t_count; ++t)
    if (anchor_of[t] >= 0) {
      out[t].center = fixed_c[t];
      out[t].rotation = angle_axis_to_rotation(fixed_a[t]);
    }
  if (n == 0) return out;

  // one SPD banded matrix serves both the center and angle-axis systems;
  // unordered pair {t,u} appears twice in the written objective, hence the 2x
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::Matrix<double, Eigen::Dynamic, 6> rhs(n, 6);
  for (int i = 0; i < n; ++i) {
    int t = index_of[i];
    double diag = p.data_weight;
    Eigen::Matrix<double, 6, 1> b;
    b << p.data_weight * p.observed[t].center, p.data_weight * a_obs[t];
    for (int dt = -kSmoothingWindow; dt <= kSmoothingWindow; ++dt) {
      int u = t + dt;
      if (dt == 0 || u < 0 || u >= t_count) continue;
      double w = 2.0 * window_weight(dt, p.window_sigma);
      diag += w;
      if (anchor_of[u] >= 0) {
        b.head<3>() += w * fixed_c[u];
        b.tail<3>() += w * fixed_a[u];
      } else {
        trips.emplace_back(i, free_of[u], -w);
      }
    }
    trips.emplace_back(i, i, diag);
    rhs.row(i) = b.transpose();
  }

  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(m);
  if (solver.info() != Eigen::Success) throw SingularSystem("trajectory system factorization failed");
  Eigen::Matrix<double, Eigen::Dynamic, 6> x = solver.solve(rhs);
  if (solver.info() != Eigen::Success) throw SingularSystem("trajectory solve failed");

  for (int i = 0; i < n; ++i) {
    int t = index_of[i];
    out[t].center = x.row(i).head<3>().transpose();
    out[t].rotation = angle_axis_to_rotation(x.row(i).tail<3>().transpose());
  }
  return out;
}

struct TrajectoryErrors {
  double position = 0.0;         // mean center distance, world units
  double orientation_deg = 0.0;  // mean relative angle, degrees
};

inline TrajectoryErrors trajectory_errors(const std::vector<CameraPose>& estimate,
                                          const std::vector<CameraPose>& ground_truth) {
  if (estimate.size() != ground_truth.size())
    throw LengthMismatch("trajectory lengths differ: " + std::to_string(estimate.size()) +
                         " vs " + std::to_string(ground_truth.size()));
  if (estimate.empty()) return {};
  TrajectoryErrors e;
  for (size_t t = 0; t < estimate.size(); ++t) {
    e.position += (estimate[t].center - ground_truth[t].center).norm();
    Eigen::Matrix3d rel = estimate[t].rotation * ground_truth[t].rotation.transpose();
    e.orientation_deg += rotation_to_angle_axis(rel).norm() * 180.0 / M_PI;
  }
  e.position /= static_cast<double>(estimate.size());
  e.orientation_deg /= static_cast<double>(estimate.size());
  return e;
}

}  // namespace nvs
