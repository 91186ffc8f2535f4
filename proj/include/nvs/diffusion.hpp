#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "nvs/camera.hpp"
#include "nvs/grid.hpp"
#include "nvs/linear_system.hpp"
#include "nvs/parallel.hpp"
#include "nvs/pyramid.hpp"
#include "nvs/solver_params.hpp"
#include "nvs/warp.hpp"
#include "nvs/weights.hpp"

namespace nvs {

// Everything one frame's solve sees at a single pyramid level. Warped sources
// and visibility follow the current depth estimate; the previous-frame
// reprojection is fixed for the level (it depends only on the previous
// result). Absent previous frame (t = 0) leaves prev_* empty, which disables
// every temporal term.
struct FrameProblem {
  Grid<double> sparse_depth;
  Grid<Color> sparse_color;
  Mask sparse_mask;

  std::vector<Grid<Color>> warped;
  std::vector<Mask> warp_valid;
  std::vector<Mask> visibility;

  Grid<double> prev_depth;
  Grid<Color> prev_color;
  Mask prev_valid;

  SolverParams params;

  int width() const { return sparse_depth.width(); }
  int height() const { return sparse_depth.height(); }
  bool has_prev() const { return !prev_valid.empty() && params.lambda_t > 0.0; }
  int num_sources() const { return static_cast<int>(warped.size()); }
};

inline WeightMaps make_weights(const FrameProblem& p, const Grid<Color>& color_estimate) {
  WeightMaps w;
  w.w_hat_d = compute_w_hat_D(p.sparse_color, p.sparse_mask, color_estimate, p.params.sigma,
                              !p.params.no_pc_weights);
  w.w_p.reserve(p.warped.size());
  for (size_t s = 0; s < p.warped.size(); ++s)
    w.w_p.push_back(compute_w_P(p.warped[s], p.warp_valid[s], p.visibility[s], color_estimate,
                                p.params.sigma, !p.params.no_proj_weights));
  if (p.params.no_depth_weights)
    w.w_d = Grid<double>(p.width(), p.height(), 1.0);
  else
    w.w_d = compute_w_D(color_estimate, w.w_p, p.visibility, !p.params.no_image_grads);
  if (p.has_prev())
    w.w_t = compute_w_T(p.prev_color, p.prev_valid, p.warped, p.warp_valid, p.params.sigma);
  else
    w.w_t = Grid<double>(p.width(), p.height(), 0.0);
  return w;
}

inline GridSystem build_depth_system(const FrameProblem& p, const WeightMaps& w) {
  const int gw = p.width(), gh = p.height();
  GridSystem s(gw, gh);
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) {
      if (x + 1 < gw) s.add_edge_x(x, y, w.w_d(x, y), 0.0);
      if (y + 1 < gh) s.add_edge_y(x, y, w.w_d(x, y), 0.0);
      if (p.params.lambda_pc > 0.0 && w.w_hat_d(x, y) > 0.0)
        s.add_data(x, y, p.params.lambda_pc * w.w_hat_d(x, y), p.sparse_depth(x, y));
      if (p.has_prev() && w.w_t(x, y) > 0.0)
        s.add_data(x, y, p.params.lambda_t * w.w_t(x, y), p.prev_depth(x, y));
    }
  return s;
}

inline GridSystem build_color_system(const FrameProblem& p, const WeightMaps& w, int channel) {
  const int gw = p.width(), gh = p.height();
  GridSystem s(gw, gh);
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) {
      if (x + 1 < gw) s.add_edge_x(x, y, 1.0, 0.0);
      if (y + 1 < gh) s.add_edge_y(x, y, 1.0, 0.0);
      for (int src = 0; src < p.num_sources(); ++src) {
        double wp = w.w_p[src](x, y);
        if (wp > 0.0 && p.params.lambda_p > 0.0)
          s.add_data(x, y, p.params.lambda_p * wp, p.warped[src](x, y)[channel]);
        if (p.params.lambda_g > 0.0) {
          // gradient matching on edges, gated by the weaker endpoint
          if (x + 1 < gw) {
            double we = p.params.lambda_g * std::min(wp, w.w_p[src](x + 1, y));
            if (we > 0.0)
              s.add_edge_x(x, y, we,
                           p.warped[src](x + 1, y)[channel] - p.warped[src](x, y)[channel]);
          }
          if (y + 1 < gh) {
            double we = p.params.lambda_g * std::min(wp, w.w_p[src](x, y + 1));
            if (we > 0.0)
              s.add_edge_y(x, y, we,
                           p.warped[src](x, y + 1)[channel] - p.warped[src](x, y)[channel]);
          }
        }
      }
      if (p.has_prev() && w.w_t(x, y) > 0.0)
        s.add_data(x, y, p.params.lambda_t * w.w_t(x, y), p.prev_color(x, y)[channel]);
    }
  return s;
}

inline Grid<double> solve_depth(const FrameProblem& p, const WeightMaps& w, Grid<double> init,
                                SolveStats* stats = nullptr) {
  GridSystem s = build_depth_system(p, w);
  return pcg_solve(s, std::move(init), p.params.cg_tolerance, p.params.inner_iters, stats);
}

inline Grid<Color> solve_color(const FrameProblem& p, const WeightMaps& w, Grid<Color> init,
                               SolveStats* stats = nullptr) {
  const int gw = p.width(), gh = p.height();
  SolveStats total;
  for (int c = 0; c < 3; ++c) {
    GridSystem s = build_color_system(p, w, c);
    Grid<double> z(gw, gh, 0.0);
    for (int i = 0; i < static_cast<int>(z.size()); ++i) z[i] = init[i][c];
    SolveStats st;
    z = pcg_solve(s, std::move(z), p.params.cg_tolerance, p.params.inner_iters, &st);
    total.iterations += st.iterations;
    total.rel_residual = std::max(total.rel_residual, st.rel_residual);
    total.converged = total.converged && st.converged;
    for (int i = 0; i < static_cast<int>(z.size()); ++i) init[i][c] = z[i];
  }
  if (stats) *stats = total;
  return init;
}

// The full discrete energy, summed directly term by term. This is the
// reference the assembled systems are tested against, so it must stay an
// independent implementation.
inline double eval_energy(const Grid<double>& depth, const Grid<Color>& color,
                          const FrameProblem& p, const WeightMaps& w) {
  const int gw = p.width(), gh = p.height();
  const SolverParams& prm = p.params;
  double e = 0.0;
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) {
      // depth smoothness
      double gd = 0.0;
      if (x + 1 < gw) gd += (depth(x + 1, y) - depth(x, y)) * (depth(x + 1, y) - depth(x, y));
      if (y + 1 < gh) gd += (depth(x, y + 1) - depth(x, y)) * (depth(x, y + 1) - depth(x, y));
      e += w.w_d(x, y) * gd;
      // sparse depth data
      if (w.w_hat_d(x, y) > 0.0) {
        double d = depth(x, y) - p.sparse_depth(x, y);
        e += prm.lambda_pc * w.w_hat_d(x, y) * d * d;
      }
      // color smoothness
      if (x + 1 < gw) e += (color(x + 1, y) - color(x, y)).squaredNorm();
      if (y + 1 < gh) e += (color(x, y + 1) - color(x, y)).squaredNorm();
      for (int src = 0; src < p.num_sources(); ++src) {
        double wp = w.w_p[src](x, y);
        if (wp > 0.0)
          e += prm.lambda_p * wp * (color(x, y) - p.warped[src](x, y)).squaredNorm();
        if (prm.lambda_g > 0.0) {
          if (x + 1 < gw) {
            double we = std::min(wp, w.w_p[src](x + 1, y));
            if (we > 0.0)
              e += prm.lambda_g * we *
                   ((color(x + 1, y) - color(x, y)) -
                    (p.warped[src](x + 1, y) - p.warped[src](x, y)))
                       .squaredNorm();
          }
          if (y + 1 < gh) {
            double we = std::min(wp, w.w_p[src](x, y + 1));
            if (we > 0.0)
              e += prm.lambda_g * we *
                   ((color(x, y + 1) - color(x, y)) -
                    (p.warped[src](x, y + 1) - p.warped[src](x, y)))
                       .squaredNorm();
          }
        }
      }
      // temporal
      if (p.has_prev() && w.w_t(x, y) > 0.0) {
        double dd = depth(x, y) - p.prev_depth(x, y);
        e += prm.lambda_t * w.w_t(x, y) * dd * dd;
        e += prm.lambda_t * w.w_t(x, y) * (color(x, y) - p.prev_color(x, y)).squaredNorm();
      }
    }
  return e;
}

// Re-derives warped sources and visibility after a depth update. multiscale
// passes a capture over the level's cameras; tests may pass {}.
using RewarpFn = std::function<void(const Grid<double>&, FrameProblem&)>;

struct AlternateResult {
  Grid<double> depth;
  Grid<Color> color;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  // fixed-weight quadratic objective before/after each linear solve,
  // alternating depth, color, depth, color, ...
  std::vector<double> objective_before;
  std::vector<double> objective_after;
  bool converged = true;
  int pcg_iterations = 0;
};

inline AlternateResult alternate_solve(FrameProblem& p, Grid<double> depth, Grid<Color> color,
                                       const RewarpFn& rewarp = {}) {
  AlternateResult r;
  {
    WeightMaps w0 = make_weights(p, color);
    r.initial_energy = eval_energy(depth, color, p, w0);
    r.final_energy = r.initial_energy;
  }
  for (int round = 0; round < p.params.outer_iters; ++round) {
    {
      WeightMaps w = make_weights(p, color);
      GridSystem s = build_depth_system(p, w);
      r.objective_before.push_back(system_energy(s, depth));
      SolveStats st;
      depth = pcg_solve(s, std::move(depth), p.params.cg_tolerance, p.params.inner_iters, &st);
      r.objective_after.push_back(system_energy(s, depth));
      r.converged = r.converged && st.converged;
      r.pcg_iterations += st.iterations;
    }
    if (rewarp) rewarp(depth, p);
    {
      WeightMaps w = make_weights(p, color);
      double before = 0.0, after = 0.0;
      for (int c = 0; c < 3; ++c) {
        GridSystem s = build_color_system(p, w, c);
        Grid<double> z(p.width(), p.height(), 0.0);
        for (int i = 0; i < static_cast<int>(z.size()); ++i) z[i] = color[i][c];
        before += system_energy(s, z);
        SolveStats st;
        z = pcg_solve(s, std::move(z), p.params.cg_tolerance, p.params.inner_iters, &st);
        after += system_energy(s, z);
        r.converged = r.converged && st.converged;
        r.pcg_iterations += st.iterations;
        for (int i = 0; i < static_cast<int>(z.size()); ++i) color[i][c] = z[i];
      }
      r.objective_before.push_back(before);
      r.objective_after.push_back(after);
    }
  }
  if (p.params.outer_iters > 0) {
    WeightMaps wf = make_weights(p, color);
    r.final_energy = eval_energy(depth, color, p, wf);
  }
  r.depth = std::move(depth);
  r.color = std::move(color);
  return r;
}

// uniform-weight Poisson infill of sparse values; pixels with data stay near
// it, the rest interpolate harmonically
inline Grid<double> harmonic_infill(const Grid<double>& values, const Mask& mask,
                                    double cg_tolerance, int max_iters,
                                    SolveStats* stats = nullptr) {
  const int gw = values.width(), gh = values.height();
  GridSystem s(gw, gh);
  double sum = 0.0;
  int count = 0;
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) {
      if (x + 1 < gw) s.add_edge_x(x, y, 1.0, 0.0);
      if (y + 1 < gh) s.add_edge_y(x, y, 1.0, 0.0);
      if (mask(x, y)) {
        s.add_data(x, y, 1.0, values(x, y));
        sum += values(x, y);
        ++count;
      }
    }
  Grid<double> init(gw, gh, count > 0 ? sum / count : 0.0);
  if (count == 0) return init;
  return pcg_solve(s, std::move(init), cg_tolerance, max_iters, stats);
}

inline Grid<Color> harmonic_infill_color(const Grid<Color>& values, const Mask& mask,
                                         double cg_tolerance, int max_iters,
                                         SolveStats* stats = nullptr) {
  const int gw = values.width(), gh = values.height();
  Grid<Color> out(gw, gh, Color::Zero());
  for (int c = 0; c < 3; ++c) {
    Grid<double> v(gw, gh, 0.0);
    for (int i = 0; i < static_cast<int>(v.size()); ++i) v[i] = values[i][c];
    SolveStats st;
    Grid<double> filled = harmonic_infill(v, mask, cg_tolerance, max_iters, &st);
    if (stats) {
      stats->iterations += st.iterations;
      stats->rel_residual = std::max(stats->rel_residual, st.rel_residual);
      stats->converged = stats->converged && st.converged;
    }
    for (int i = 0; i < static_cast<int>(v.size()); ++i) out[i][c] = filled[i];
  }
  return out;
}

struct FrameInputs {
  const std::vector<Grid<Color>>* source_images = nullptr;  // full resolution
  std::vector<CameraPose> source_cams;
  const std::vector<ColoredPoint>* cloud = nullptr;
  CameraPose virtual_cam;
  const Grid<double>* prev_depth = nullptr;  // previous rendered frame, full res
  const Grid<Color>* prev_color = nullptr;
  CameraPose prev_cam;
  SolverParams params;
};

struct MultiscaleResult {
  Grid<double> depth;
  Grid<Color> color;  // clamped to [0,1]
  Mask coverage;      // 1 where some data term touched the pixel at the finest level
  double energy = 0.0;
  bool converged = true;
  int fine_level_pcg_iters = 0;
  int total_pcg_iters = 0;
};

inline MultiscaleResult multiscale_solve(const FrameInputs& in, int width, int height) {
  const SolverParams& prm = in.params;
  const int levels = prm.pyramid_levels;
  check_pyramid_dims(width, height, levels, 8);

  const int n_src = static_cast<int>(in.source_images->size());
  std::vector<std::vector<Grid<Color>>> src_pyr(n_src);
  for (int s = 0; s < n_src; ++s) src_pyr[s] = build_pyramid((*in.source_images)[s], levels);

  const bool has_prev = in.prev_depth != nullptr && in.prev_color != nullptr;

  MultiscaleResult out;
  Grid<double> depth;
  Grid<Color> color;
  for (int level = levels - 1; level >= 0; --level) {
    const int lw = level_dim(width, level);
    const int lh = level_dim(height, level);
    const double scale = std::ldexp(1.0, -level);
    CameraPose vcam = scaled_camera(in.virtual_cam, scale);
    std::vector<CameraPose> scams(n_src);
    for (int s = 0; s < n_src; ++s) scams[s] = scaled_camera(in.source_cams[s], scale);

    SplatMap splat = splat_points(*in.cloud, vcam, lw, lh);

    FrameProblem p;
    p.sparse_depth = std::move(splat.depth);
    p.sparse_color = std::move(splat.color);
    p.sparse_mask = std::move(splat.occupancy);
    p.params = prm;
    p.warped.resize(n_src);
    p.warp_valid.resize(n_src);
    p.visibility.resize(n_src);
    if (has_prev) {
      ReprojectedFrame prev = reproject_frame(*in.prev_depth, *in.prev_color, in.prev_cam,
                                              vcam, lw, lh);
      p.prev_depth = std::move(prev.depth);
      p.prev_color = std::move(prev.color);
      p.prev_valid = std::move(prev.valid);
    }

    if (level == levels - 1) {
      if (splat.occupied_count > 0) {
        SolveStats infill;
        depth = harmonic_infill(p.sparse_depth, p.sparse_mask, prm.cg_tolerance, prm.inner_iters,
                                &infill);
        color = harmonic_infill_color(p.sparse_color, p.sparse_mask, prm.cg_tolerance,
                                      prm.inner_iters, &infill);
        out.total_pcg_iters += infill.iterations;
        if (level == 0) out.fine_level_pcg_iters += infill.iterations;
      } else {
        depth = Grid<double>(lw, lh, 1.0);
        color = Grid<Color>(lw, lh, Color::Constant(0.5));
      }
    } else {
      depth = upsample_bilinear(depth, lw, lh);
      color = upsample_bilinear(color, lw, lh);
    }

    auto rewarp = [&](const Grid<double>& d, FrameProblem& fp) {
      for (int s = 0; s < n_src; ++s) {
        WarpResult wr = warp_frame(src_pyr[s][level], scams[s], vcam, d);
        fp.warped[s] = std::move(wr.color);
        fp.warp_valid[s] = std::move(wr.valid);
        fp.visibility[s] =
            visibility_map(vcam, d, scams[s], src_pyr[s][level].width(), src_pyr[s][level].height());
      }
    };
    rewarp(depth, p);

    AlternateResult res = alternate_solve(p, std::move(depth), std::move(color), rewarp);
    depth = std::move(res.depth);
    color = std::move(res.color);
    out.converged = out.converged && res.converged;
    out.total_pcg_iters += res.pcg_iterations;
    if (level == 0) {
      out.fine_level_pcg_iters += res.pcg_iterations;
      out.energy = res.final_energy;
      out.coverage = Mask(lw, lh, 0);
      for (int y = 0; y < lh; ++y)
        for (int x = 0; x < lw; ++x) {
          bool touched = p.sparse_mask(x, y) != 0;
          for (int s = 0; s < n_src && !touched; ++s)
            touched = p.warp_valid[s](x, y) != 0;
          if (!touched && !p.prev_valid.empty()) touched = p.prev_valid(x, y) != 0;
          out.coverage(x, y) = touched ? 1 : 0;
        }
    }
  }

  for (auto& c : color.data())
    c = c.cwiseMax(0.0).cwiseMin(1.0);
  out.depth = std::move(depth);
  out.color = std::move(color);
  return out;
}

}  // namespace nvs
