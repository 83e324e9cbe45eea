#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gds/balayage.hpp"
#include "random_configs.hpp"

using namespace gds;

TEST_CASE("radial references") {
  const Scenario bf = ball_fill_scenario(2, std::numbers::pi / 4.0, 1.0, 1.5, {0.25});
  const RadialReference ref = radial_reference(bf);
  CHECK(ref.r_star == doctest::Approx(0.5).epsilon(1e-14));
  // <nu_ref, 1> = -(vol B(r0) - vol B(r*))
  const double expect = -(std::numbers::pi - std::numbers::pi / 4.0);
  CHECK(ref.pairing([](const Point&) { return 1.0; }) == doctest::Approx(expect).epsilon(1e-8));
  // odometer vanishes outside the occupied ball and is positive inside
  CHECK(std::abs(ref.odometer(Point{0.7, 0.0, 0.0})) <= 1e-12);
  CHECK(ref.odometer(Point{0.25, 0.0, 0.0}) > 0.0);
  CHECK(ref.occupied().signed_distance(Point{0.5, 0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(radial_reference(annulus_sphere_scenario(3, 0.05, 0.5, {2.0}, 0.5)).m_inf ==
        doctest::Approx(0.2094395).epsilon(1e-6));
  CHECK(radial_reference(annulus_sphere_scenario(2, 0.05, 0.5, {2.0}, 0.5)).m_inf == 0.0);

  CHECK_THROWS_AS(radial_reference(ball_fill_scenario(2, 4.0, 1.0, 1.5, {0.25})), InvalidArgument);
  CHECK_THROWS_AS(radial_reference(five_site_scenario()), InvalidArgument);
}

TEST_CASE("ball and point potentials") {
  for (int d : {2, 3}) {
    const double a = 0.8, vol = unit_ball_volume(d) * std::pow(a, d);
    // outside the ball the uniform ball looks like a point mass
    for (double r : {0.9, 1.3, 2.0}) {
      CHECK(ball_potential(d, a, r) == doctest::Approx(point_potential(d, vol, r)).epsilon(1e-12));
    }
    // continuous across the surface
    CHECK(ball_potential(d, a, a * (1 - 1e-9)) == doctest::Approx(ball_potential(d, a, a * (1 + 1e-9))).epsilon(1e-7));
  }
}

TEST_CASE("pairing with test functions") {
  const auto w = LatticeWindow::for_ball(2, 0.25, 2.0);
  MassConfig a(w), b(w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    a[i] = std::sin(0.3 * double(i));
    b[i] = std::cos(0.7 * double(i));
  }
  MassConfig sum(w);
  for (std::size_t i = 0; i < w.size(); ++i) sum[i] = 2.0 * a[i] - b[i];
  for (const TestFunction& t : standard_test_functions(2)) {
    CHECK(pair_with_test_function(sum, t.f) ==
          doctest::Approx(2.0 * pair_with_test_function(a, t.f) - pair_with_test_function(b, t.f)).epsilon(1e-12));
    CHECK(t.f(Point{1.6, 0.0, 0.0}) == 0.0);
  }
  CHECK(pair_with_test_function(a, [](const Point&) { return 1.0; }) == doctest::Approx(total_mass(a)).epsilon(1e-12));
}

TEST_CASE("balayage to a density") {
  const std::string text = R"({"d": 2, "R": 2, "xi": 0.25,
    "source": [{"type": "atom", "at": [0, 0], "mass": 0.5}],
    "lambda": [{"type": "density", "shape": "ball", "radius": 1.5, "value": 1}]})";
  const Scenario s = parse_scenario(text);
  GdsOptions o;
  o.R = 2.0;
  o.stop_tol = 1e-10;
  const BalayageResult r = balayage_to_density(s, 0.25, o);
  // mass is preserved and the final density never exceeds lambda beyond the stopping residual
  CHECK(total_mass(r.run.nu) == doctest::Approx(total_mass(r.sigma)).epsilon(1e-10));
  for (std::size_t i = 0; i < r.density.size(); ++i) {
    CHECK(r.density[i] <= r.lambda[i] + 1e-9);
    CHECK(r.density[i] >= -1e-12);
  }
}

TEST_CASE("iterated balayage") {
  GdsOptions base;
  base.stop_tol = 1e-13;
  SUBCASE("five-site") {
    const Scenario five = five_site_scenario();
    const MassConfig s = discretize_scenario(five, 1.0, 2.5);
    const IteratedCheck c = iterated_gds_check(s, 2.5, 5.5, base);
    CHECK(c.discrepancy <= 1e-8 * std::max(1.0, c.sigma_max));
  }
  SUBCASE("random") {
    for (std::uint64_t seed : {3u, 4u}) {
      const MassConfig s = testing::random_admissible(2, 0.5, 3.0, seed, 0.95, 0.9);
      const IteratedCheck c = iterated_gds_check(s, 3.0, 4.5, base);
      CHECK(c.discrepancy <= 1e-8 * std::max(1.0, c.sigma_max));
    }
    // more positive than negative mass: the excess parks on the boundary of B(0,R1)
    GdsOptions loose = base;
    loose.require_admissible = false;
    const MassConfig s = testing::random_admissible(3, 0.5, 2.0, 9, 1.3, 0.9);
    const IteratedCheck c = iterated_gds_check(s, 2.0, 3.5, loose);
    CHECK(c.boundary_mass_r1 > 0.0);
    CHECK(c.discrepancy <= 1e-8 * std::max(1.0, c.sigma_max));
  }
  SUBCASE("validation") {
    const MassConfig s = discretize_scenario(five_site_scenario(), 1.0, 2.5);
    CHECK_THROWS_AS(iterated_gds_check(s, 2.5, 3.0, base), InvalidArgument);
    CHECK_THROWS_AS(iterated_gds_check(s, 0.5, 3.0, base), InvalidArgument);
  }
}

TEST_CASE("scaling study on a small ball fill") {
  const Scenario s = ball_fill_scenario(2, std::numbers::pi / 4.0, 1.0, 1.5, {0.25, 0.125});
  ScalingOptions o;
  o.stop_tol = 1e-10;
  const ConvergenceReport rep = scaling_study(s, standard_test_functions(2), o);
  CHECK(rep.reference == "ball_fill");
  REQUIRE(rep.rows.size() == 2);
  for (const auto& row : rep.rows) {
    CHECK(row.mass_error <= 1e-8);
    CHECK(row.pairing_errors.size() == rep.test_functions.size());
    CHECK(row.boundary_mass <= 1e-8);
  }
  CHECK(rep.rows[1].pairing_errors[0] < rep.rows[0].pairing_errors[0] * 1.1);
}

TEST_CASE("scaling study without a reference compares to the finest grid") {
  std::string text = R"({"d": 2, "R": 1.5, "xi_sequence": [0.5, 0.25, 0.125],
    "source": [{"type": "density", "shape": "ball", "radius": 0.5, "value": -1}]})";
  const Scenario s = parse_scenario(text);
  const ConvergenceReport rep = scaling_study(s, standard_test_functions(2), ScalingOptions{});
  CHECK(rep.reference == "finest_grid");
  REQUIRE(rep.rows.size() == 3);
  for (const auto& row : rep.rows) CHECK(row.topplings == 0);
}

TEST_CASE("boundary mass with nonpositive sigma is zero") {
  const std::string text = R"({"d": 2, "R_list": [1.5, 2.5], "xi": 0.5,
    "source": [{"type": "density", "shape": "ball", "radius": 1, "value": -1}]})";
  const Scenario s = parse_scenario(text);
  const BoundaryMassReport rep = boundary_mass_study(s, s.R_list, 0.5, 1e-10);
  REQUIRE(rep.rows.size() == 2);
  for (const auto& row : rep.rows) CHECK(row.boundary_mass == 0.0);
  CHECK(rep.admissible);
  CHECK_THROWS_AS(boundary_mass_study(s, {2.5, 1.5}, 0.5, 1e-10), InvalidArgument);
}
