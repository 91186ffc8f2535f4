#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nvs/camera.hpp"

namespace nvs {

inline constexpr double kCenterEps = 1e-8;  // keeps the score finite at coincident centers

struct ViewRanking {
  std::vector<double> scores;  // r_F per candidate, same order as the input list
  std::vector<int> selected;   // top-n candidate indices, best first
};

// proximity in center and viewing direction; higher is closer
inline double view_score(const CameraPose& virt, const CameraPose& input, double sigma) {
  double d2 = (virt.center - input.center).squaredNorm();
  double tr = (virt.rotation * input.rotation.transpose()).trace();
  double angle = std::acos(std::clamp((tr - 1.0) / 2.0, -1.0, 1.0));
  return std::exp(-angle / (2.0 * M_PI * sigma * sigma)) / (d2 + kCenterEps);
}

// ties broken toward the lower view index; n larger than the candidate set
// selects everything
inline ViewRanking rank_views(const CameraPose& virt, const std::vector<CameraPose>& inputs,
                              double sigma, int n) {
  ViewRanking r;
  r.scores.reserve(inputs.size());
  for (const CameraPose& cam : inputs) r.scores.push_back(view_score(virt, cam, sigma));
  std::vector<int> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return r.scores[a] > r.scores[b]; });
  order.resize(std::min<std::size_t>(std::max(n, 0), order.size()));
  r.selected = std::move(order);
  return r;
}

}  // namespace nvs
