#include <doctest.h>

#include <cmath>

#include "gds/sandpile.hpp"
#include "random_configs.hpp"

using namespace gds;
using gds::testing::random_admissible;
using gds::testing::sup_diff;

namespace {

MassConfig five_site() {
  MassConfig s(LatticeWindow::for_ball(2, 1.0, 2.5));
  s[Site{0, 0, 0}] = 1.0;
  for (Site k : {Site{1, 0, 0}, Site{-1, 0, 0}, Site{0, 1, 0}, Site{0, -1, 0}}) s[k] = -1.0;
  return s;
}

GdsOptions opts(double R, Schedule s = Schedule::kSweep, double tol = 1e-10) {
  GdsOptions o;
  o.R = R;
  o.schedule = s;
  o.stop_tol = tol;
  o.seed = 42;
  return o;
}

}  // namespace

TEST_CASE("confining ball uses the open ball") {
  const auto w = LatticeWindow::for_ball(2, 1.0, 2.0);
  const ConfiningBall ball(w, 2.0);
  CHECK(ball.inside(w.index(Site{1, 1, 0})));
  CHECK_FALSE(ball.inside(w.index(Site{2, 0, 0})));  // |x| = R is exterior
  CHECK(ball.on_boundary(w.index(Site{2, 0, 0})));
  CHECK_FALSE(ball.on_boundary(w.index(Site{2, 2, 0})));
  CHECK(ball.sites().size() == 9);
}

TEST_CASE("topple") {
  const auto w = LatticeWindow::for_ball(2, 1.0, 3.0);
  const ConfiningBall ball(w, 3.0);
  SUBCASE("positive site") {
    MassConfig c(w);
    c[Site{}] = 4.0;
    CHECK(topple(c, Site{}, ball) == 4.0);
    CHECK(c[Site{}] == 0.0);
    for (Site k : {Site{1, 0, 0}, Site{-1, 0, 0}, Site{0, 1, 0}, Site{0, -1, 0}}) CHECK(c[k] == 1.0);
  }
  SUBCASE("nonpositive site is left alone") {
    MassConfig c(w);
    c[Site{}] = -2.0;
    const MassConfig before = c;
    CHECK(topple(c, Site{}, ball) == 0.0);
    CHECK(c == before);
  }
  SUBCASE("mixed signs") {
    MassConfig c(w);
    c[Site{}] = 4.0;
    c[Site{1, 0, 0}] = -1.0;
    topple(c, Site{}, ball);
    CHECK(c[Site{}] == 0.0);
    CHECK(c[Site{1, 0, 0}] == 0.0);
    for (Site k : {Site{-1, 0, 0}, Site{0, 1, 0}, Site{0, -1, 0}}) CHECK(c[k] == 1.0);
  }
  SUBCASE("outside the ball") {
    MassConfig c(w);
    CHECK_THROWS_WITH_AS(topple(c, Site{3, 0, 0}, ball), "toppling outside confining ball", InvalidArgument);
  }
}

TEST_CASE("quadratic weight and mass totals") {
  MassConfig c(LatticeWindow::centered(2, 0.5, 3));
  c[Site{}] = 1.0;
  CHECK(quadratic_weight(c) == 0.0);
  MassConfig d(LatticeWindow::centered(2, 0.5, 3));
  d[Site{1, 0, 0}] = 1.0;
  CHECK(quadratic_weight(d) == doctest::Approx(0.25));

  MassConfig e(LatticeWindow::centered(2, 1.0, 2));
  e[Site{}] = 2.0;
  e[Site{1, 0, 0}] = -3.0;
  const auto [p, n] = mass_totals(e);
  CHECK(p == 2.0);
  CHECK(n == 3.0);
}

TEST_CASE("single topplings move Q by xi^2 m and never raise M+ or M-") {
  const double xi = 0.5, R = 3.0;
  MassConfig c = random_admissible(2, xi, R, 3);
  const ConfiningBall ball(c.window(), R);
  for (int step = 0; step < 200; ++step) {
    const std::size_t i = ball.sites()[(step * 37) % ball.sites().size()];
    const auto [p0, n0] = mass_totals(c);
    const double q0 = quadratic_weight(c), t0 = total(c);
    const double m = topple(c, c.window().site(i), ball);
    const auto [p1, n1] = mass_totals(c);
    CHECK(quadratic_weight(c) - q0 == doctest::Approx(xi * xi * m).epsilon(1e-9).scale(1.0));
    CHECK(p1 <= p0 + 1e-14 * (p0 + n0));
    CHECK(n1 <= n0 + 1e-14 * (p0 + n0));
    CHECK(std::abs(total(c) - t0) <= 1e-14 * (p0 + n0));
  }
}

TEST_CASE("nonpositive sigma is already stable") {
  MassConfig s(LatticeWindow::for_ball(2, 1.0, 3.0));
  s[Site{}] = -1.0;
  s[Site{1, 1, 0}] = -0.5;
  const GdsResult r = run_gds(s, opts(3.0));
  CHECK(r.nu == s);
  CHECK(r.rounds == 1);
  CHECK(r.topplings == 0);
  for (double v : r.u.values()) CHECK(v == 0.0);
}

TEST_CASE("five-site example settles after one toppling") {
  const MassConfig s = five_site();
  for (Schedule sched : {Schedule::kSweep, Schedule::kQueue, Schedule::kRandom, Schedule::kRedBlack}) {
    const GdsResult r = run_gds(s, opts(2.5, sched, 1e-12));
    const auto& w = s.window();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Site k = w.site(i);
      const int l1 = std::abs(k[0]) + std::abs(k[1]);
      CHECK(r.nu[i] == (l1 == 0 ? 0.0 : l1 == 1 ? -0.75 : 0.0));
      CHECK(r.u[i] == (l1 == 0 ? 1.0 : 0.0));
    }
    CHECK(r.topplings == 1);
  }
}

TEST_CASE("run_gds rejects bad input") {
  MassConfig s = five_site();
  s[Site{}] = 5.0;
  CHECK_THROWS_WITH_AS(run_gds(s, opts(2.5)), doctest::Contains("inadmissible"), InvalidArgument);
  GdsOptions relaxed = opts(2.5);
  relaxed.require_admissible = false;
  CHECK_NOTHROW(run_gds(s, relaxed));

  MassConfig out(LatticeWindow::for_ball(2, 1.0, 2.5));
  out[Site{2, 2, 0}] = -1.0;
  CHECK_THROWS_AS(run_gds(out, opts(2.5)), InvalidArgument);

  GdsOptions capped = opts(8.0);
  capped.max_rounds = 2;
  CHECK_THROWS_AS(run_gds(random_admissible(2, 1.0, 8.0, 1), capped), ConvergenceError);
}

TEST_CASE("structural invariants on random admissible runs") {
  for (int d : {2, 3}) {
    const double R = d == 2 ? 8.0 : 4.0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const double xi = seed % 2 ? 1.0 : 0.5;
      const MassConfig s = random_admissible(d, xi, R, seed, 0.9, seed == 4 ? 0.95 : 0.6);
      GdsOptions o = opts(R);
      o.audit = true;
      const GdsResult r = run_gds(s, o);
      const auto& w = s.window();
      const ConfiningBall ball(w, R);
      const double smax = max_abs(s.values());

      const LatticeField lap = laplacian(r.u, Extension::kZero);
      double u_sum = 0.0, lap_err = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(r.u[i] >= 0.0);
        if (!ball.inside(i)) CHECK(r.u[i] == 0.0);
        lap_err = std::max(lap_err, std::abs(r.nu[i] - (s[i] + lap[i])));
        u_sum += r.u[i];
        if (ball.inside(i)) {
          CHECK(r.nu[i] < r.stop_tol);
          CHECK(std::min(r.u[i], -r.nu[i]) <= r.stop_tol * (1.0 + xi * xi));
        }
        CHECK(r.nu[i] >= -negative_part(s[i]) - r.stop_tol);
      }
      CHECK(lap_err <= 1e-8 * smax);
      CHECK(std::abs(total(r.nu) - total(s)) <= 1e-12 * (mass_totals(s).first + mass_totals(s).second));
      CHECK(u_sum == doctest::Approx(xi * xi * r.total_emitted).epsilon(1e-10));

      // Odometer only grows: every recorded emission is positive.
      for (const Toppling& t : r.trace) CHECK(t.emitted > 0.0);
      CHECK(static_cast<long>(r.trace.size()) == r.topplings);

      // Q bounds and monotone masses, sampled per round.
      const auto [mp, mm] = mass_totals(s);
      const double reach2 = (R + xi) * (R + xi);
      double prev_p = mp, prev_m = mm;
      for (const RoundStats& st : r.diagnostics) {
        CHECK(st.q <= reach2 * mp * (1 + 1e-12));
        CHECK(st.q >= -reach2 * mm * (1 + 1e-12));
        CHECK(st.m_plus <= prev_p + 1e-12 * (mp + mm));
        CHECK(st.m_minus <= prev_m + 1e-12 * (mp + mm));
        prev_p = st.m_plus;
        prev_m = st.m_minus;
      }
    }
  }
}

TEST_CASE("schedules agree (abelian property)") {
  for (int d : {2, 3}) {
    const double R = d == 2 ? 8.0 : 4.0;
    const MassConfig s = random_admissible(d, 1.0, R, 17 + d);
    const GdsResult base = run_gds(s, opts(R));
    const double umax = gds::testing::max_value(base.u.values());
    const double smax = max_abs(s.values());
    for (Schedule sched : {Schedule::kQueue, Schedule::kRandom, Schedule::kRedBlack}) {
      const GdsResult r = run_gds(s, opts(R, sched));
      CHECK(sup_diff(r.nu.values(), base.nu.values()) <= 1e-6 * smax);
      CHECK(sup_diff(r.u.values(), base.u.values()) <= 1e-6 * umax);
    }
  }
}

TEST_CASE("audited and fast paths give the same configuration") {
  const MassConfig s = random_admissible(2, 1.0, 8.0, 5);
  for (Schedule sched : {Schedule::kSweep, Schedule::kRedBlack}) {
    GdsOptions a = opts(8.0, sched);
    a.audit = true;
    const GdsResult fast = run_gds(s, opts(8.0, sched));
    const GdsResult slow = run_gds(s, a);
    CHECK(fast.topplings == slow.topplings);
    CHECK(sup_diff(fast.nu.values(), slow.nu.values()) <= 1e-13);
    if (sched == Schedule::kSweep) CHECK(fast.nu == slow.nu);
  }
}

TEST_CASE("positive mass ends on the outer boundary when the ball is small") {
  MassConfig s = random_admissible(2, 1.0, 4.0, 2, 0.95, 0.95);
  GdsOptions o = opts(4.0);
  const GdsResult r = run_gds(s, o);
  const ConfiningBall ball(s.window(), 4.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (r.nu[i] >= r.stop_tol) CHECK(ball.on_boundary(i));
  }
  const SiteMask occ = occupied_set(r, s, 1e-12);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (r.u[i] > 0.0) CHECK(occ[i]);
  }
}

TEST_CASE("schedule names") {
  for (Schedule s : {Schedule::kSweep, Schedule::kQueue, Schedule::kRandom, Schedule::kRedBlack}) {
    CHECK(parse_schedule(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_schedule("spiral"), InvalidArgument);
}
