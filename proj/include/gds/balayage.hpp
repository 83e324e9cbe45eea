#pragma once

// Partial balayage experiments: balayage against a background density,
// radial closed-form references, the grid-refinement study, the iterated
// balayage check and the boundary-mass study.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gds/green.hpp"
#include "gds/sandpile.hpp"
#include "gds/scenario.hpp"

namespace gds {

/// Smooth, compactly supported test function.
struct TestFunction {
  std::string name;
  std::function<double(const Point&)> f;
};

/// exp(1 - 1/(1 - |x-c|^2/a^2)) inside B(c, a), 0 outside.
double bump(const Point& x, const Point& c, double a, int d);

/// Fixed library of bumps and bump-windowed polynomials supported in
/// B(0, 1.5).
std::vector<TestFunction> standard_test_functions(int d);

/// xi^d sum_x nu(x) phi(x).
double pair_with_test_function(const MassConfig& nu, const std::function<double(const Point&)>& phi);

/// Closed-form limits for the radial scenarios.
struct RadialReference {
  ReferenceKind kind = ReferenceKind::kNone;
  int d = 2;
  // ball_fill: nu_ref = -chi_{r_star < |x| < r0}, occupied set B(0, r_star).
  double mass = 0.0;
  double r0 = 0.0;
  double r_star = 0.0;
  // annulus_sphere: large-R limit of the boundary mass (0 for d = 2).
  double m_inf = 0.0;

  /// <nu_ref, phi> by polar/spherical quadrature.
  double pairing(const std::function<double(const Point&)>& phi) const;
  /// Continuum potential U^{nu_ref}(x) with the kernel -(2/pi) log|x| (d = 2)
  /// or 3/(2 pi |x|) (d = 3).
  double potential(const Point& x) const;
  /// Continuum odometer u = U^sigma - U^{nu_ref}.
  double odometer(const Point& x) const;
  ContinuousSet occupied() const;
};

/// Throws InvalidArgument for scenarios without a radial reference or with
/// inconsistent parameters (e.g. ball_fill mass exceeding the ball volume).
RadialReference radial_reference(const Scenario& s);

/// Continuum potential of the uniform unit-density ball B(0, a) at radius r.
double ball_potential(int d, double a, double r);
/// Continuum potential of a point mass m at the origin at radius r.
double point_potential(int d, double m, double r);

struct BalayageResult {
  MassConfig sigma;    ///< discretized mu - lambda
  MassConfig lambda;   ///< discretized lambda
  GdsResult run;
  MassConfig density;  ///< nu + lambda, the final density against lambda
};

/// Discretizes sigma = mu - lambda at spacing xi and runs the sandpile on
/// B(0, options.R).
BalayageResult balayage_to_density(const Scenario& s, double xi, const GdsOptions& options);

struct ScalingOptions {
  double stop_tol = 0.0;
  Schedule schedule = Schedule::kSweep;
  /// Subsamples per axis for the cell averages. Higher than the discretize
  /// default: at q = 4 the error on cells cut by a density edge oscillates
  /// with xi and swamps the refinement trend.
  int quadrature_points = 16;
  /// Slack for the monotonicity check, row[i] <= (1 + slack) * row[i-1].
  double slack = 0.10;
  std::function<void(const std::string&)> log;
};

struct ConvergenceRow {
  double xi = 0.0;
  std::size_t sites = 0;
  long rounds = 0;
  long topplings = 0;
  double seconds = 0.0;
  std::vector<double> pairing_errors;  ///< one per test function
  double potential_error = 0.0;        ///< sup over the probe set
  double odometer_error = 0.0;         ///< sup over the odometer probes
  double sandwich_eps = 0.0;           ///< minimal eps (NaN without a reference set)
  double boundary_mass = 0.0;          ///< xi^d * positive mass on the outer boundary
  double mass_error = 0.0;             ///< |<nu,1> - <sigma,1>|
};

struct ConvergenceReport {
  std::string scenario;
  std::string reference;  ///< "ball_fill", ... or "finest_grid"
  std::vector<std::string> test_functions;
  std::vector<ConvergenceRow> rows;
  /// Per error column: pairing columns by test-function name, then
  /// "potential" and "odometer". True when nonincreasing within slack.
  std::vector<std::pair<std::string, bool>> monotone;
  bool all_monotone = true;
};

ConvergenceReport scaling_study(const Scenario& s, const std::vector<TestFunction>& tests,
                                const ScalingOptions& options = {});

struct IteratedCheck {
  double discrepancy = 0.0;  ///< sup |gds_R2(gds_R1(sigma)) - gds_R2(sigma)|
  double sigma_max = 0.0;
  double boundary_mass_r1 = 0.0;  ///< xi^d * positive part of gds_R1(sigma)
  double boundary_mass_r2 = 0.0;
};

/// Runs both sides of gds_R2(gds_R1(sigma)) = gds_R2(sigma). sigma may live on
/// any window; it is copied onto the windows of the two balls. Requires
/// supp sigma in B(0, R1) and R2 > R1 + xi.
IteratedCheck iterated_gds_check(const MassConfig& sigma, double R1, double R2, const GdsOptions& base);

struct BoundaryMassRow {
  double R = 0.0;
  double boundary_mass = 0.0;      ///< M_R, xi^d * positive mass on the outer boundary
  double interior_residual = 0.0;  ///< xi^d * positive mass left inside the ball
  long rounds = 0;
  long topplings = 0;
  double seconds = 0.0;
};

struct BoundaryMassReport {
  int d = 2;
  double xi = 0.0;
  double m_plus = 0.0;   ///< xi^d * sum sigma_+
  double m_minus = 0.0;  ///< xi^d * sum sigma_-
  bool admissible = true;
  std::optional<double> m_inf;
  std::vector<BoundaryMassRow> rows;
  bool strictly_decreasing = true;
  /// Strict decrease that survives the residual bracket
  /// M_R <= true value <= M_R + interior_residual.
  bool certified_decreasing = true;
};

BoundaryMassReport boundary_mass_study(const Scenario& s, const std::vector<double>& R_list, double xi,
                                       double stop_tol, const std::function<void(const std::string&)>& log = {});

/// Copies the values of `m` that fall inside `window` (others must be 0).
MassConfig embed(const MassConfig& m, const LatticeWindow& window);

}  // namespace gds
