#include "gds/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gds/kernels.hpp"
#include "gds/sandpile.hpp"

namespace gds {

namespace {

double default_omega(const ConfiningBall& ball) {
  const double n = 2.0 * ball.radius() / ball.window().xi() + 2.0;
  return std::clamp(2.0 / (1.0 + std::sin(std::numbers::pi / n)), 1.0, 1.9);
}

}  // namespace

ObstacleSolution solve_obstacle(const MassConfig& sigma, const GreenKernel& kernel,
                                const ObstacleOptions& options) {
  const auto& w = sigma.window();
  if (!(options.R > 0.0)) throw InvalidArgument("confining radius must be positive");
  if (options.omega != 0.0 && !(options.omega >= 1.0 && options.omega <= 1.9)) {
    throw InvalidArgument("relaxation factor must lie in [1, 1.9]");
  }
  ConfiningBall ball(w, options.R);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (sigma[i] != 0.0 && !ball.inside(i)) {
      throw InvalidArgument("support of sigma must lie in the open ball B(0,R)");
    }
  }
  const auto [mp, mm] = mass_totals(sigma);
  if (options.require_admissible && mp > mm * (1.0 + 1e-12) + 1e-300) {
    throw InvalidArgument("inadmissible configuration: positive mass exceeds negative mass");
  }

  ObstacleSolution sol{potential(sigma, kernel, options.red_black ? Execution::kParallel : Execution::kSerial),
                       LatticeField(w), LatticeField(w), MassConfig(w)};
  const auto U = sol.potential.values();
  const auto [lo_it, hi_it] = std::minmax_element(U.begin(), U.end());
  const double range = *hi_it - *lo_it;
  sol.tol = options.tol > 0.0 ? options.tol : 1e-12 * std::max(range, 1e-300);
  sol.omega = options.omega != 0.0 ? options.omega : default_omega(ball);

  std::copy(U.begin(), U.end(), sol.v.values().begin());
  const auto& geo = ball.geometry();
  auto v = sol.v.values();
  double change = 0.0;
  long it = 0;
  do {
    if (it >= options.max_iters) {
      throw ConvergenceError("obstacle solver did not converge within " + std::to_string(options.max_iters) +
                                 " sweeps",
                             it, change);
    }
    change = options.red_black ? kernels::parallel::obstacle_red_black(geo, v, U, sol.omega)
                               : kernels::serial::obstacle_sweep(geo, v, U, sol.omega);
    ++it;
  } while (change >= sol.tol);
  sol.iterations = it;
  sol.residual = change;

  const double floor = *lo_it - range;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (v[i] > U[i] || v[i] < floor) throw InvariantViolation("obstacle iterate left its bounds");
    sol.u[i] = ball.inside(i) ? U[i] - v[i] : 0.0;
  }
  const LatticeField lap = laplacian(sol.u, Extension::kZero);
  for (std::size_t i = 0; i < w.size(); ++i) sol.nu[i] = sigma[i] + lap[i];
  return sol;
}

ComplementarityReport complementarity_report(const ObstacleSolution& sol, double R) {
  const auto& w = sol.u.window();
  const double r2 = R * R;
  ComplementarityReport rep;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double u = sol.u[i];
    rep.u_min = std::max(rep.u_min, -u);
    if (w.norm2(w.site(i)) < r2) {
      rep.nu_pos_max_inside = std::max(rep.nu_pos_max_inside, sol.nu[i]);
      rep.compl_max = std::max(rep.compl_max, std::abs(std::min(u, -sol.nu[i])));
    } else {
      rep.u_outside_max_abs = std::max(rep.u_outside_max_abs, std::abs(u));
    }
  }
  return rep;
}

double subharmonicity_violation(const LatticeField& v, double R) {
  const auto& w = v.window();
  const double r2 = R * R;
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Site k = w.site(i);
    if (w.norm2(k) < r2) worst = std::max(worst, -discrete_laplacian(v, k));
  }
  return worst;
}

}  // namespace gds
