#include "gds/balayage.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace gds {

namespace {

using boost::math::quadrature::gauss;
using Clock = std::chrono::steady_clock;

constexpr double kPi = std::numbers::pi;

double radius(const Point& x, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += x[i] * x[i];
  return std::sqrt(s);
}

// Composite Gauss-Legendre rule on [a, b].
template <class F>
double panels(F f, double a, double b, int n) {
  double s = 0.0;
  const double h = (b - a) / n;
  for (int k = 0; k < n; ++k) s += gauss<double, 20>::integrate(f, a + k * h, a + (k + 1) * h);
  return s;
}

// Integral of phi over the shell a < |x| < b.
double shell_integral(const std::function<double(const Point&)>& phi, int d, double a, double b) {
  if (!(b > a)) return 0.0;
  const int nphi = 256;
  if (d == 2) {
    auto ring = [&](double r) {
      double s = 0.0;
      for (int k = 0; k < nphi; ++k) {
        const double t = 2.0 * kPi * k / nphi;
        s += phi(Point{r * std::cos(t), r * std::sin(t), 0.0});
      }
      return r * s * (2.0 * kPi / nphi);
    };
    return panels(ring, a, b, 32);
  }
  auto sphere = [&](double r) {
    auto band = [&](double c) {
      const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
      double s = 0.0;
      for (int k = 0; k < nphi / 2; ++k) {
        const double t = 2.0 * kPi * k / (nphi / 2);
        s += phi(Point{r * sn * std::cos(t), r * sn * std::sin(t), r * c});
      }
      return s * (2.0 * kPi / (nphi / 2));
    };
    return r * r * panels(band, -1.0, 1.0, 8);
  };
  return panels(sphere, a, b, 16);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Probe positions: multiples of h inside |x| <= r.
std::vector<Point> grid_probes(int d, double h, double r) {
  std::vector<Point> out;
  const int n = static_cast<int>(std::floor(r / h + 1e-9));
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      for (int k = (d == 3 ? -n : 0); k <= (d == 3 ? n : 0); ++k) {
        const Point p{i * h, j * h, k * h};
        if (radius(p, d) <= r + 1e-12) out.push_back(p);
      }
    }
  }
  return out;
}

double boundary_positive(const MassConfig& nu, const ConfiningBall& ball) {
  double s = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (ball.on_boundary(i)) s += positive_part(nu[i]);
  }
  return nu.window().cell_volume() * s;
}

GreenKernel continuum_kernel(const LatticeWindow& w) {
  GreenKernel k = kernel_for_window(w);
  return w.dim() == 2 ? k.with_constant(continuum_constant_2d(w.xi())) : k;
}

bool nonincreasing(const std::vector<double>& col, double slack) {
  for (std::size_t i = 1; i < col.size(); ++i) {
    if (col[i] > (1.0 + slack) * col[i - 1]) return false;
  }
  return true;
}

}  // namespace

double bump(const Point& x, const Point& c, double a, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += (x[i] - c[i]) * (x[i] - c[i]);
  s /= a * a;
  return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
}

std::vector<TestFunction> standard_test_functions(int d) {
  return {
      {"bump", [d](const Point& x) { return bump(x, Point{}, 1.5, d); }},
      {"bump_offset", [d](const Point& x) { return bump(x, Point{0.35, 0.15, 0.0}, 0.6, d); }},
      {"bump_poly", [d](const Point& x) { return (1.0 + x[0] + x[1] * x[1]) * bump(x, Point{}, 1.25, d); }},
      {"bump_r2",
       [d](const Point& x) {
         double r2 = 0.0;
         for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
         return r2 * bump(x, Point{}, 0.9, d);
       }},
  };
}

double pair_with_test_function(const MassConfig& nu, const std::function<double(const Point&)>& phi) {
  const auto& w = nu.window();
  long double s = 0.0L;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] != 0.0) s += static_cast<long double>(nu[i]) * phi(w.position(w.site(i)));
  }
  return static_cast<double>(w.cell_volume() * s);
}

double ball_potential(int d, double a, double r) {
  if (d == 2) return r < a ? (a * a - r * r) - 2.0 * a * a * std::log(a) : -2.0 * a * a * std::log(r);
  return r < a ? 3.0 * a * a - r * r : 2.0 * a * a * a / r;
}

double point_potential(int d, double m, double r) {
  return d == 2 ? -(2.0 / kPi) * m * std::log(r) : 3.0 * m / (2.0 * kPi * r);
}

double RadialReference::pairing(const std::function<double(const Point&)>& phi) const {
  if (kind != ReferenceKind::kBallFill) throw InvalidArgument("no closed-form pairing for this scenario");
  return -shell_integral(phi, d, r_star, r0);
}

double RadialReference::potential(const Point& x) const {
  if (kind != ReferenceKind::kBallFill) throw InvalidArgument("no closed-form potential for this scenario");
  const double r = radius(x, d);
  return -(ball_potential(d, r0, r) - ball_potential(d, r_star, r));
}

double RadialReference::odometer(const Point& x) const {
  if (kind != ReferenceKind::kBallFill) throw InvalidArgument("no closed-form odometer for this scenario");
  const double r = radius(x, d);
  if (r >= r_star) return 0.0;
  return point_potential(d, mass, r) - ball_potential(d, r_star, r);
}

ContinuousSet RadialReference::occupied() const {
  if (kind != ReferenceKind::kBallFill) throw InvalidArgument("no closed-form occupied set for this scenario");
  return ContinuousSet(d, Ball{Point{}, r_star});
}

RadialReference radial_reference(const Scenario& s) {
  RadialReference ref;
  ref.kind = s.reference.kind;
  ref.d = s.d;
  switch (s.reference.kind) {
    case ReferenceKind::kBallFill: {
      ref.mass = s.reference.mass;
      ref.r0 = s.reference.r0;
      const double wd = unit_ball_volume(s.d);
      if (!(ref.mass < wd * std::pow(ref.r0, s.d))) {
        throw InvalidArgument("ball_fill mass must be below the volume of B(0, r0)");
      }
      ref.r_star = std::pow(ref.mass / wd, 1.0 / s.d);
      return ref;
    }
    case ReferenceKind::kAnnulusSphere:
      ref.m_inf = s.d >= 3 ? (s.d - 2.0) / s.d * unit_sphere_area(s.d) * s.reference.t : 0.0;
      return ref;
    case ReferenceKind::kNone:
      break;
  }
  throw InvalidArgument("scenario has no radial reference");
}

MassConfig embed(const MassConfig& m, const LatticeWindow& window) {
  if (m.window().dim() != window.dim() || m.window().xi() != window.xi()) {
    throw InvalidArgument("cannot embed between lattices of different dimension or spacing");
  }
  MassConfig out(window);
  const auto& src = m.window();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0.0) continue;
    const Site k = src.site(i);
    if (!window.contains(k)) throw InvalidArgument("configuration does not fit the target window");
    out[k] = m[i];
  }
  return out;
}

BalayageResult balayage_to_density(const Scenario& s, double xi, const GdsOptions& options) {
  BalayageResult r{discretize_scenario(s, xi, options.R), discretize_lambda(s, xi, options.R),
                   GdsResult(LatticeWindow::for_ball(s.d, xi, options.R)),
                   MassConfig(LatticeWindow::for_ball(s.d, xi, options.R))};
  r.run = run_gds(r.sigma, options);
  for (std::size_t i = 0; i < r.density.size(); ++i) r.density[i] = r.run.nu[i] + r.lambda[i];
  return r;
}

ConvergenceReport scaling_study(const Scenario& s, const std::vector<TestFunction>& tests,
                                const ScalingOptions& opt) {
  if (s.xi_sequence.empty()) throw InvalidArgument("scaling study needs a xi sequence");
  ConvergenceReport rep;
  rep.scenario = s.name;
  for (const auto& t : tests) rep.test_functions.push_back(t.name);
  const bool analytic = s.reference.kind == ReferenceKind::kBallFill;
  std::optional<RadialReference> ref;
  if (analytic) ref = radial_reference(s);
  rep.reference = analytic ? to_string(s.reference.kind) : "finest_grid";

  const double probe_radius = std::min(1.5, 0.75 * s.R);
  const std::vector<Point> probes = grid_probes(s.d, s.xi_sequence.front() >= 0.25 ? s.xi_sequence.front() : 0.25,
                                                probe_radius);
  std::vector<Point> odo_probes;
  if (analytic) {
    for (double f : {0.25, 0.5, 0.75}) {
      const double r = f * ref->r_star;
      odo_probes.push_back(Point{r, 0.0, 0.0});
      odo_probes.push_back(Point{r / std::sqrt(2.0), -r / std::sqrt(2.0), 0.0});
    }
  } else {
    odo_probes = probes;
  }
  std::vector<double> ref_pairings;
  if (analytic) {
    for (const auto& t : tests) ref_pairings.push_back(ref->pairing(t.f));
  }

  // Raw per-row values kept for the finest-grid fallback.
  std::vector<std::vector<double>> raw_pair, raw_pot, raw_odo;

  for (double xi : s.xi_sequence) {
    const auto t0 = Clock::now();
    GdsOptions go;
    go.R = s.R;
    go.schedule = opt.schedule;
    go.stop_tol = opt.stop_tol > 0.0 ? opt.stop_tol : s.stop_tol;
    go.seed = s.seed;
    go.require_admissible = s.require_admissible;
    MassConfig sigma = discretize_scenario(s, xi, s.R, opt.quadrature_points);
    std::optional<GdsResult> result;
    try {
      result = run_gds(sigma, go);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "scaling study aborted at xi=" << xi << ": " << e.what();
      throw InvariantViolation(msg.str());
    }
    const GdsResult& run = *result;
    const auto& w = sigma.window();
    ConvergenceRow row;
    row.xi = xi;
    row.sites = w.size();
    row.rounds = run.rounds;
    row.topplings = run.topplings;
    row.mass_error = std::abs(total_mass(run.nu) - total_mass(sigma));
    const ConfiningBall ball(w, s.R);
    row.boundary_mass = boundary_positive(run.nu, ball);

    std::vector<double> pv, tv, ov;
    if (analytic) {
      const GreenKernel kernel = continuum_kernel(w);
      for (std::size_t k = 0; k < tests.size(); ++k) {
        row.pairing_errors.push_back(std::abs(pair_with_test_function(run.nu, tests[k].f) - ref_pairings[k]));
      }
      for (const Point& p : probes) {
        const Site site = nearest_site(p, w);
        const double err = std::abs(potential_at(run.nu, kernel, site) - ref->potential(w.position(site)));
        row.potential_error = std::max(row.potential_error, err);
      }
      for (const Point& p : odo_probes) {
        const Site site = nearest_site(p, w);
        row.odometer_error = std::max(row.odometer_error, std::abs(run.u[site] - ref->odometer(w.position(site))));
      }
      const double tol = std::max(go.stop_tol > 0.0 ? go.stop_tol : run.stop_tol, 1e-300) * 10.0;
      row.sandwich_eps = minimal_sandwich_eps(occupied_set(run, sigma, tol), w, ref->occupied());
    } else {
      MassConfig moved(w);
      for (std::size_t i = 0; i < w.size(); ++i) moved[i] = run.nu[i] - sigma[i];
      for (const auto& t : tests) pv.push_back(pair_with_test_function(moved, t.f));
      for (const Point& p : probes) tv.push_back(run.u[nearest_site(p, w)]);
      ov = tv;
      row.sandwich_eps = std::numeric_limits<double>::quiet_NaN();
    }
    raw_pair.push_back(pv);
    raw_pot.push_back(tv);
    raw_odo.push_back(ov);
    row.seconds = seconds_since(t0);
    rep.rows.push_back(row);
    if (opt.log) {
      std::ostringstream msg;
      msg << "xi=" << xi << " rounds=" << row.rounds << " topplings=" << row.topplings << " t=" << row.seconds << "s";
      opt.log(msg.str());
    }
  }

  std::size_t checked = rep.rows.size();
  if (!analytic) {
    const std::size_t f = rep.rows.size() - 1;
    for (std::size_t r = 0; r < rep.rows.size(); ++r) {
      auto& row = rep.rows[r];
      for (std::size_t k = 0; k < tests.size(); ++k) row.pairing_errors.push_back(std::abs(raw_pair[r][k] - raw_pair[f][k]));
      for (std::size_t k = 0; k < probes.size(); ++k) {
        row.potential_error = std::max(row.potential_error, std::abs(raw_pot[r][k] - raw_pot[f][k]));
      }
      row.odometer_error = row.potential_error;
    }
    checked = rep.rows.size() > 1 ? rep.rows.size() - 1 : 1;
  }

  auto column = [&](auto get) {
    std::vector<double> c;
    for (std::size_t r = 0; r < checked; ++r) c.push_back(get(rep.rows[r]));
    return c;
  };
  for (std::size_t k = 0; k < tests.size(); ++k) {
    const bool ok = nonincreasing(column([k](const ConvergenceRow& r) { return r.pairing_errors[k]; }), opt.slack);
    rep.monotone.emplace_back(tests[k].name, ok);
  }
  rep.monotone.emplace_back("potential", nonincreasing(column([](const ConvergenceRow& r) { return r.potential_error; }), opt.slack));
  rep.monotone.emplace_back("odometer", nonincreasing(column([](const ConvergenceRow& r) { return r.odometer_error; }), opt.slack));
  for (const auto& [name, ok] : rep.monotone) rep.all_monotone = rep.all_monotone && ok;
  return rep;
}

IteratedCheck iterated_gds_check(const MassConfig& sigma, double R1, double R2, const GdsOptions& base) {
  const auto& src = sigma.window();
  const int d = src.dim();
  const double xi = src.xi();
  if (!(R1 > 0.0) || !(R2 > R1 + xi)) throw InvalidArgument("iterated check needs R2 > R1 + xi");
  const double r1sq = R1 * R1;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] != 0.0 && !(src.norm2(src.site(i)) < r1sq)) {
      throw InvalidArgument("support of sigma must lie in the open ball B(0,R1)");
    }
  }
  const LatticeWindow w1 = LatticeWindow::for_ball(d, xi, R1);
  const LatticeWindow w2 = LatticeWindow::for_ball(d, xi, R2);

  GdsOptions o1 = base, o2 = base;
  o1.R = R1;
  o2.R = R2;
  const GdsResult direct = run_gds(embed(sigma, w2), o2);
  const GdsResult inner = run_gds(embed(sigma, w1), o1);
  const GdsResult outer = run_gds(embed(inner.nu, w2), o2);

  IteratedCheck c;
  c.sigma_max = max_abs(sigma.values());
  for (std::size_t i = 0; i < w2.size(); ++i) {
    c.discrepancy = std::max(c.discrepancy, std::abs(outer.nu[i] - direct.nu[i]));
  }
  c.boundary_mass_r1 = boundary_positive(inner.nu, ConfiningBall(w1, R1));
  c.boundary_mass_r2 = boundary_positive(direct.nu, ConfiningBall(w2, R2));
  return c;
}

BoundaryMassReport boundary_mass_study(const Scenario& s, const std::vector<double>& R_list, double xi,
                                       double stop_tol, const std::function<void(const std::string&)>& log) {
  if (R_list.empty()) throw InvalidArgument("boundary-mass study needs at least one radius");
  for (std::size_t i = 1; i < R_list.size(); ++i) {
    if (!(R_list[i] > R_list[i - 1])) throw InvalidArgument("R list must be increasing");
  }
  BoundaryMassReport rep;
  rep.d = s.d;
  rep.xi = xi;
  if (s.reference.kind == ReferenceKind::kAnnulusSphere) rep.m_inf = radial_reference(s).m_inf;

  for (double R : R_list) {
    const auto t0 = Clock::now();
    const MassConfig sigma = discretize_scenario(s, xi, R);
    if (rep.rows.empty()) {
      const auto [p, n] = mass_totals(sigma);
      rep.m_plus = sigma.window().cell_volume() * p;
      rep.m_minus = sigma.window().cell_volume() * n;
      rep.admissible = p <= n;
    }
    GdsOptions go;
    go.R = R;
    go.stop_tol = stop_tol > 0.0 ? stop_tol : s.stop_tol;
    go.require_admissible = false;
    const GdsResult run = run_gds(sigma, go);
    const ConfiningBall ball(sigma.window(), R);
    BoundaryMassRow row;
    row.R = R;
    row.boundary_mass = boundary_positive(run.nu, ball);
    double inside = 0.0;
    for (std::size_t i : ball.sites()) inside += positive_part(run.nu[i]);
    row.interior_residual = sigma.window().cell_volume() * inside;
    row.rounds = run.rounds;
    row.topplings = run.topplings;
    row.seconds = seconds_since(t0);
    rep.rows.push_back(row);
    if (log) {
      std::ostringstream msg;
      msg.precision(10);
      msg << "R=" << R << " M_R=" << row.boundary_mass << " rounds=" << row.rounds << " t=" << row.seconds << "s";
      log(msg.str());
    }
  }
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& prev = rep.rows[i - 1];
    const auto& cur = rep.rows[i];
    if (prev.boundary_mass > 0.0) {
      rep.strictly_decreasing = rep.strictly_decreasing && cur.boundary_mass < prev.boundary_mass;
      rep.certified_decreasing =
          rep.certified_decreasing && cur.boundary_mass + cur.interior_residual < prev.boundary_mass;
    } else {
      rep.strictly_decreasing = rep.strictly_decreasing && cur.boundary_mass == 0.0;
      rep.certified_decreasing = rep.strictly_decreasing;
    }
  }
  return rep;
}

}  // namespace gds
