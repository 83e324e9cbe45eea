#pragma once

// Discrete obstacle problem on the confining ball:
//
//   v = sup { f : Delta f >= 0 in B(0,R), f <= U^sigma everywhere },
//   u = U^sigma - v,   nu = sigma + Delta u.
//
// Solved by projected Gauss-Seidel / SOR starting from v = U^sigma. Outside
// the ball v is pinned to U^sigma.

#include "gds/green.hpp"
#include "gds/lattice.hpp"

namespace gds {

struct ObstacleOptions {
  double R = 0.0;
  /// Stop when the largest update of a sweep is below tol. <= 0 selects
  /// 1e-12 * (max U^sigma - min U^sigma).
  double tol = 0.0;
  long max_iters = 5'000'000;
  /// Relaxation factor in [1, 1.9]; 0 picks one from the ball diameter.
  double omega = 0.0;
  /// Use the red-black OpenMP sweep instead of the lexicographic one.
  bool red_black = false;
  bool require_admissible = true;
};

struct ObstacleSolution {
  LatticeField potential;  ///< U^sigma
  LatticeField v;
  LatticeField u;
  MassConfig nu;
  long iterations = 0;
  double residual = 0.0;  ///< last sweep's largest update
  double tol = 0.0;
  double omega = 1.0;
};

/// Throws InvalidArgument for inadmissible sigma or support outside the ball
/// and ConvergenceError past max_iters.
ObstacleSolution solve_obstacle(const MassConfig& sigma, const GreenKernel& kernel,
                                const ObstacleOptions& options);

struct ComplementarityReport {
  double u_min = 0.0;               ///< max(0, -min u)
  double u_outside_max_abs = 0.0;   ///< max |u| outside the ball
  double nu_pos_max_inside = 0.0;   ///< max(0, max nu) on the ball
  double compl_max = 0.0;           ///< max |min(u, -nu)| on the ball
};

ComplementarityReport complementarity_report(const ObstacleSolution& sol, double R);

/// Largest violation of Delta v >= 0 over the ball (0 if none).
double subharmonicity_violation(const LatticeField& v, double R);

}  // namespace gds
