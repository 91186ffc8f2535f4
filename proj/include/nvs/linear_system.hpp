#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "nvs/grid.hpp"
#include "nvs/parallel.hpp"

namespace nvs {

struct NonFiniteInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Screened-Poisson quadratic over a grid with forward-difference edges and
// homogeneous Neumann boundary:
//
//   E(z) = sum_e w_e (z_q - z_p - g_e)^2 + sum_p aw_p z_p^2 - 2 ab_p z_p + c
//
// wx/gx live on the edge (x,y)-(x+1,y) stored at (x,y), last column unused;
// wy/gy likewise for vertical edges. Node data terms sum_k a_k (z - f_k)^2
// fold into aw = sum a_k, ab = sum a_k f_k, c += sum a_k f_k^2.
struct GridSystem {
  Grid<double> wx, wy;
  Grid<double> gx, gy;
  Grid<double> aw;
  Grid<double> ab;
  double constant = 0.0;

  explicit GridSystem(int w = 0, int h = 0)
      : wx(w, h, 0.0), wy(w, h, 0.0), gx(w, h, 0.0), gy(w, h, 0.0), aw(w, h, 0.0),
        ab(w, h, 0.0) {}

  int width() const { return aw.width(); }
  int height() const { return aw.height(); }

  void add_data(int x, int y, double weight, double target) {
    aw(x, y) += weight;
    ab(x, y) += weight * target;
    constant += weight * target * target;
  }

  // folds another weighted target into the horizontal/vertical edge at (x,y)
  void add_edge_x(int x, int y, double weight, double target) {
    fold(wx(x, y), gx(x, y), weight, target);
  }
  void add_edge_y(int x, int y, double weight, double target) {
    fold(wy(x, y), gy(x, y), weight, target);
  }

 private:
  void fold(double& w, double& g, double add_w, double add_g) {
    if (add_w <= 0.0) return;
    // sum_k w_k (d - g_k)^2 = W (d - gbar)^2 + const
    double new_w = w + add_w;
    double gbar = (w * g + add_w * add_g) / new_w;
    constant += w * g * g + add_w * add_g * add_g - new_w * gbar * gbar;
    w = new_w;
    g = gbar;
  }
};

inline void check_system_finite(const GridSystem& s) {
  auto ok = [](const Grid<double>& g, bool nonneg) {
    for (double v : g.data()) {
      if (!std::isfinite(v)) return false;
      if (nonneg && v < 0.0) return false;
    }
    return true;
  };
  if (!ok(s.wx, true) || !ok(s.wy, true) || !ok(s.aw, true) || !ok(s.gx, false) ||
      !ok(s.gy, false) || !ok(s.ab, false))
    throw NonFiniteInput("linear system has non-finite or negative coefficients");
}

// A z, matrix-free. A is SPD whenever weights are nonnegative with a positive
// data weight reachable in every connected component (Gershgorin: row diagonal
// aw + sum of incident edge weights dominates the off-diagonal sum by aw).
inline void system_apply(const GridSystem& s, const Grid<double>& z, Grid<double>& out) {
  const int w = s.width(), h = s.height();
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double v = s.aw(x, y) * z(x, y);
      if (x + 1 < w) v += s.wx(x, y) * (z(x, y) - z(x + 1, y));
      if (x > 0) v += s.wx(x - 1, y) * (z(x, y) - z(x - 1, y));
      if (y + 1 < h) v += s.wy(x, y) * (z(x, y) - z(x, y + 1));
      if (y > 0) v += s.wy(x, y - 1) * (z(x, y) - z(x, y - 1));
      out(x, y) = v;
    }
  });
}

inline Grid<double> system_rhs(const GridSystem& s) {
  const int w = s.width(), h = s.height();
  Grid<double> b(w, h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = s.ab(x, y);
      if (x + 1 < w) v -= s.wx(x, y) * s.gx(x, y);
      if (x > 0) v += s.wx(x - 1, y) * s.gx(x - 1, y);
      if (y + 1 < h) v -= s.wy(x, y) * s.gy(x, y);
      if (y > 0) v += s.wy(x, y - 1) * s.gy(x, y - 1);
      b(x, y) = v;
    }
  return b;
}

inline Grid<double> system_diagonal(const GridSystem& s) {
  const int w = s.width(), h = s.height();
  Grid<double> d(w, h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = s.aw(x, y);
      if (x + 1 < w) v += s.wx(x, y);
      if (x > 0) v += s.wx(x - 1, y);
      if (y + 1 < h) v += s.wy(x, y);
      if (y > 0) v += s.wy(x, y - 1);
      d(x, y) = v;
    }
  return d;
}

// E(z) by direct summation, constant included, so subproblem objectives are
// comparable across iterates.
inline double system_energy(const GridSystem& s, const Grid<double>& z) {
  const int w = s.width(), h = s.height();
  double e = s.constant;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w && s.wx(x, y) > 0.0) {
        double d = z(x + 1, y) - z(x, y) - s.gx(x, y);
        e += s.wx(x, y) * d * d;
      }
      if (y + 1 < h && s.wy(x, y) > 0.0) {
        double d = z(x, y + 1) - z(x, y) - s.gy(x, y);
        e += s.wy(x, y) * d * d;
      }
      e += s.aw(x, y) * z(x, y) * z(x, y) - 2.0 * s.ab(x, y) * z(x, y);
    }
  return e;
}

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = true;
};

// Jacobi-preconditioned conjugate gradients, matrix-free. All reductions run
// in fixed row order so results are bitwise reproducible at any thread count.
// Non-convergence within max_iters is reported through stats, not thrown.
inline Grid<double> pcg_solve(const GridSystem& s, Grid<double> z, double tolerance,
                              int max_iters, SolveStats* stats = nullptr) {
  check_system_finite(s);
  const int w = s.width(), h = s.height();
  for (double v : z.data())
    if (!std::isfinite(v)) throw NonFiniteInput("non-finite initial iterate");

  Grid<double> b = system_rhs(s);
  Grid<double> diag = system_diagonal(s);
  Grid<double> inv_diag(w, h, 0.0);
  for (int i = 0; i < static_cast<int>(diag.size()); ++i)
    inv_diag[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;  // isolated pixel: A row is 0·z = 0

  auto dot = [&](const Grid<double>& u, const Grid<double>& v) {
    return parallel_rows_sum(h, [&](int y) {
      double acc = 0.0;
      for (int x = 0; x < w; ++x) acc += u(x, y) * v(x, y);
      return acc;
    });
  };

  Grid<double> r(w, h, 0.0), p(w, h, 0.0), q(w, h, 0.0), mr(w, h, 0.0);
  system_apply(s, z, q);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      r(x, y) = b(x, y) - q(x, y);
      mr(x, y) = inv_diag(x, y) * r(x, y);
      p(x, y) = mr(x, y);
    }
  });

  const double b_norm = std::sqrt(dot(b, b));
  const double stop = tolerance * (b_norm > 0.0 ? b_norm : 1.0);
  double rz = dot(r, mr);
  double r_norm = std::sqrt(dot(r, r));
  int it = 0;
  for (; it < max_iters && r_norm > stop; ++it) {
    system_apply(s, p, q);
    double pq = dot(p, q);
    if (pq <= 0.0) break;  // numerically semidefinite direction; stop at best iterate
    double alpha = rz / pq;
    parallel_rows(h, [&](int y) {
      for (int x = 0; x < w; ++x) {
        z(x, y) += alpha * p(x, y);
        r(x, y) -= alpha * q(x, y);
        mr(x, y) = inv_diag(x, y) * r(x, y);
      }
    });
    double rz_next = dot(r, mr);
    double beta = rz > 0.0 ? rz_next / rz : 0.0;
    rz = rz_next;
    parallel_rows(h, [&](int y) {
      for (int x = 0; x < w; ++x) p(x, y) = mr(x, y) + beta * p(x, y);
    });
    r_norm = std::sqrt(dot(r, r));
  }
  if (stats) {
    stats->iterations = it;
    stats->rel_residual = b_norm > 0.0 ? r_norm / b_norm : r_norm;
    stats->converged = r_norm <= stop;
  }
  return z;
}

}  // namespace nvs
