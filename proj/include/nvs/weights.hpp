#pragma once

#include <cmath>
#include <vector>

#include "nvs/grid.hpp"
#include "nvs/parallel.hpp"

namespace nvs {

inline constexpr double kGradEps = 1e-3;    // regularizes flat regions
inline constexpr double kWeightEps = 1e-6;  // keeps diffusion alive under full disagreement

struct WeightMaps {
  Grid<double> w_d;                // depth smoothness modulation, >= 0
  Grid<double> w_hat_d;            // sparse depth confidence in [0,1]
  std::vector<Grid<double>> w_p;   // per-source projection confidence in [0,1]
  Grid<double> w_t;                // temporal confidence in [0,1]
};

inline double color_affinity(const Color& a, const Color& b, double sigma) {
  return std::exp(-(a - b).squaredNorm() / (2.0 * sigma * sigma));
}

// squared forward-difference gradient magnitude, channels summed, Neumann at
// the far edges
inline Grid<double> grad_sq_norm(const Grid<Color>& img) {
  const int w = img.width(), h = img.height();
  Grid<double> g(w, h, 0.0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      if (x + 1 < w) v += (img(x + 1, y) - img(x, y)).squaredNorm();
      if (y + 1 < h) v += (img(x, y + 1) - img(x, y)).squaredNorm();
      g(x, y) = v;
    }
  });
  return g;
}

// confidence of each splatted point given the current color estimate; zero off
// the occupancy set. color_gate=false (ablation) keeps the bare indicator.
inline Grid<double> compute_w_hat_D(const Grid<Color>& sparse_color, const Mask& sparse_mask,
                                    const Grid<Color>& color_estimate, double sigma,
                                    bool color_gate = true) {
  const int w = color_estimate.width(), h = color_estimate.height();
  Grid<double> out(w, h, 0.0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x)
      if (sparse_mask(x, y))
        out(x, y) =
            color_gate ? color_affinity(sparse_color(x, y), color_estimate(x, y), sigma) : 1.0;
  });
  return out;
}

// agreement of one warped source with the estimate, gated by warp validity and
// visibility. color_gate=false (ablation) keeps the bare indicator.
inline Grid<double> compute_w_P(const Grid<Color>& warped, const Mask& warp_valid,
                                const Mask& visibility, const Grid<Color>& color_estimate,
                                double sigma, bool color_gate = true) {
  const int w = color_estimate.width(), h = color_estimate.height();
  Grid<double> out(w, h, 0.0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x)
      if (warp_valid(x, y) && visibility(x, y))
        out(x, y) =
            color_gate ? color_affinity(warped(x, y), color_estimate(x, y), sigma) : 1.0;
  });
  return out;
}

// depth smoothness modulation: diffuse freely on flat agreeing regions, hold
// back across color edges and where sources disagree. Pixels no source sees
// keep full smoothness so uncovered regions infill harmonically.
inline Grid<double> compute_w_D(const Grid<Color>& color_estimate,
                                const std::vector<Grid<double>>& w_p,
                                const std::vector<Mask>& visibility, bool use_grads = true) {
  const int w = color_estimate.width(), h = color_estimate.height();
  Grid<double> grad = grad_sq_norm(color_estimate);
  Grid<double> out(w, h, 0.0);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double gd = use_grads ? grad(x, y) + kGradEps : 1.0;
      double vis_sum = 0.0, wp_sum = 0.0;
      for (size_t s = 0; s < w_p.size(); ++s) {
        vis_sum += visibility[s](x, y);
        wp_sum += w_p[s](x, y);
      }
      if (vis_sum == 0.0)
        out(x, y) = 1.0 / gd;
      else
        out(x, y) = (wp_sum + kWeightEps) / (gd * vis_sum);
    }
  });
  return out;
}

// mean source agreement with the reprojected previous frame; sources whose
// warp is invalid count as full disagreement, and the weight is zero wherever
// the previous frame does not reproject
inline Grid<double> compute_w_T(const Grid<Color>& prev_color, const Mask& prev_valid,
                                const std::vector<Grid<Color>>& warped,
                                const std::vector<Mask>& warp_valid, double sigma) {
  const int w = prev_color.width(), h = prev_color.height();
  Grid<double> out(w, h, 0.0);
  const double n = static_cast<double>(warped.size());
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!prev_valid(x, y)) continue;
      double sum = 0.0;
      for (size_t s = 0; s < warped.size(); ++s)
        if (warp_valid[s](x, y))
          sum += color_affinity(prev_color(x, y), warped[s](x, y), sigma);
      out(x, y) = sum / n;
    }
  });
  return out;
}

}  // namespace nvs
