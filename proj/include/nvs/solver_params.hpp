#pragma once

namespace nvs {

struct SolverParams {
  double lambda_pc = 1.0;   // sparse point cloud attachment
  double lambda_t = 0.05;   // temporal consistency
  double lambda_p = 10.0;   // projection (color data)
  double lambda_g = 10.0;   // gradient matching
  double sigma = 0.075;     // color-affinity bandwidth
  // Bandwidth of the angular falloff in view ranking. Kept separate from
  // sigma because it acts on radians, not color distances; same default.
  double ranking_sigma = 0.075;
  int n_views = 4;          // sources used per frame
  int pyramid_levels = 7;   // 1/64 linear scale at the coarsest
  int outer_iters = 3;      // alternations per level
  int inner_iters = 500;    // PCG cap per solve
  double cg_tolerance = 1e-6;
  int kappa = 20;           // keyframe anchor spacing
  double smoothing_window_sigma = 1.5;

  // ablation switches, all off in normal operation
  bool no_pc_weights = false;     // w_hat_D falls back to the occupancy indicator
  bool no_depth_weights = false;  // w_D pinned at 1
  bool no_image_grads = false;    // drop the gradient attenuation inside w_D
  bool no_proj_weights = false;   // w_P falls back to the visibility indicator
};

}  // namespace nvs
