#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "gds/grid_io.hpp"
#include "gds/lattice.hpp"

using namespace gds;

TEST_CASE("neighbors returns the 2d adjacent sites") {
  const auto w2 = LatticeWindow::centered(2, 1.0, 3);
  const auto n = neighbors(Site{0, 0, 0}, w2);
  const std::set<Site> got(n.begin(), n.end());
  const std::set<Site> want{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  CHECK(got == want);

  const auto w3 = LatticeWindow::centered(3, 0.5, 2);
  CHECK(neighbors(Site{0, 0, 0}, w3).size() == 6);

  const auto m = neighbors(Site{1, 0, 0}, w2);
  CHECK(std::find(m.begin(), m.end(), Site{0, 0, 0}) != m.end());

  // Out-of-window sites are still returned.
  CHECK(neighbors(Site{3, 3, 0}, w2).size() == 4);
}

TEST_CASE("discrete laplacian of delta and |x|^2") {
  const auto w = LatticeWindow::centered(2, 1.0, 3);
  LatticeField delta(w);
  delta[Site{0, 0, 0}] = 1.0;
  CHECK(discrete_laplacian(delta, Site{0, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(discrete_laplacian(delta, Site{1, 0, 0}) == doctest::Approx(0.25).epsilon(1e-15));

  for (int d : {2, 3}) {
    for (double xi : {1.0, 0.37, 0.125}) {
      const auto wq = LatticeWindow::centered(d, xi, 4);
      LatticeField q(wq);
      for (std::size_t i = 0; i < wq.size(); ++i) q[i] = wq.norm2(wq.site(i));
      CHECK(discrete_laplacian(q, Site{1, -2, d == 3 ? 1 : 0}) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("laplacian of a constant vanishes in the interior") {
  const auto w = LatticeWindow::centered(3, 0.25, 3);
  LatticeField c(w);
  std::fill(c.values().begin(), c.values().end(), 2.5);
  const LatticeField lap = laplacian(c, Extension::kZero);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Site k = w.site(i);
    bool interior = true;
    for (int a = 0; a < 3; ++a) interior = interior && k[a] > w.lo()[a] && k[a] < w.hi()[a];
    if (interior) CHECK(lap[i] == 0.0);
  }
}

TEST_CASE("laplacian at the window edge needs an extension rule") {
  const auto w = LatticeWindow::centered(2, 1.0, 2);
  LatticeField f(w);
  CHECK_THROWS_WITH_AS(discrete_laplacian(f, Site{2, 0, 0}), "missing neighbor", InvalidArgument);
  CHECK_NOTHROW(discrete_laplacian(f, Site{2, 0, 0}, Extension::kZero));
}

TEST_CASE("positive and negative parts split every configuration") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  const auto w = LatticeWindow::centered(2, 0.5, 6);
  MassConfig m(w);
  for (double& v : m.values()) v = g(rng);
  double pos = 0.0, neg = 0.0, sum = 0.0, abs = 0.0;
  for (double v : m.values()) {
    CHECK(positive_part(v) - negative_part(v) == v);
    pos += positive_part(v);
    neg += negative_part(v);
    sum += v;
    abs += std::abs(v);
  }
  CHECK(std::abs((pos - neg) - sum) <= 1e-12 * abs);
  CHECK(total(m) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("nearest_site uses the half-open rounding cell") {
  const double xi = 0.5;
  const auto w = LatticeWindow::centered(2, xi, 4);
  CHECK(nearest_site(Point{0.5 * xi, 0.0, 0.0}, w) == Site{1, 0, 0});
  CHECK(nearest_site(Point{-0.5 * xi, 0.0, 0.0}, w) == Site{0, 0, 0});
  CHECK(nearest_site(Point{0.49 * xi, -0.51 * xi, 0.0}, w) == Site{0, -1, 0});
  CHECK_THROWS_AS(nearest_site(Point{10.0, 0.0, 0.0}, w), InvalidArgument);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Site k = w.site(i);
    CHECK(nearest_site(w.position(k), w) == k);
  }
}

TEST_CASE("discretize: constants, atoms and cell averages") {
  SUBCASE("constant on an aligned rectangle") {
    const double xi = 0.25;
    const auto w = LatticeWindow::centered(2, xi, 12);
    // Cells of sites -2..3 on axis 0 and -1..1 on axis 1.
    SourceTerm s;
    s.densities.push_back(DensityTerm{ContinuousSet(2, Box{{-2.5 * xi, -1.5 * xi, 0}, {3.5 * xi, 1.5 * xi, 0}}),
                                      [](const Point&) { return 1.75; }, std::nullopt});
    const MassConfig m = discretize(s, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Site k = w.site(i);
      const bool covered = k[0] >= -2 && k[0] <= 3 && k[1] >= -1 && k[1] <= 1;
      CHECK(m[i] == doctest::Approx(covered ? 1.75 : 0.0).epsilon(1e-14));
    }
  }
  SUBCASE("atom mass M at the origin with xi = 0.5") {
    const auto w = LatticeWindow::centered(2, 0.5, 4);
    SourceTerm s;
    s.atoms.push_back({Point{}, 3.0});
    const MassConfig m = discretize(s, w);
    CHECK(m[Site{0, 0, 0}] == doctest::Approx(3.0 / 0.25));
    CHECK(total_mass(m) == doctest::Approx(3.0).epsilon(1e-15));
  }
  SUBCASE("|x_1| on the unit cell converges to 1/4") {
    const auto w = LatticeWindow::centered(2, 1.0, 2);
    SourceTerm s;
    s.densities.push_back(DensityTerm{ContinuousSet(2, Box{{-0.5, -0.5, 0}, {0.5, 0.5, 0}}),
                                      [](const Point& x) { return std::abs(x[0]); }, 0.25});
    double prev = 1.0;
    for (int q : {2, 4, 16, 64}) {
      DiscretizeOptions opt;
      opt.quadrature_points = q;
      const double err = std::abs(discretize(s, w, opt)[Site{0, 0, 0}] - 0.25);
      CHECK(err <= prev);
      prev = err;
    }
    CHECK(prev < 1e-12);
  }
  SUBCASE("support outside the window") {
    const auto w = LatticeWindow::centered(2, 1.0, 2);
    SourceTerm s;
    s.atoms.push_back({Point{5.0, 0.0, 0.0}, 1.0});
    CHECK_THROWS_WITH_AS(discretize(s, w), "window too small", InvalidArgument);
  }
}

TEST_CASE("discretize preserves the total mass of smooth densities") {
  const double xi = 0.25;
  const auto w = LatticeWindow::centered(2, xi, 14);
  SourceTerm s;
  const double exact = std::pow(std::sqrt(M_PI) * std::erf(3.0), 2);
  s.densities.push_back(DensityTerm{ContinuousSet(2, Box{{-3, -3, 0}, {3, 3, 0}}),
                                    [](const Point& x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); }, exact});
  CHECK(std::abs(total_mass(discretize(s, w)) - exact) <= 1e-3 * exact);

  const auto w3 = LatticeWindow::centered(3, 0.125, 12);
  SourceTerm layer;
  layer.layers.push_back({Point{}, 1.0, 0.05});
  const MassConfig m = discretize(layer, w3);
  CHECK(total_mass(m) == doctest::Approx(0.05 * 4.0 * M_PI).epsilon(1e-12));
  // Every charged cell intersects the sphere.
  for (std::size_t i = 0; i < w3.size(); ++i) {
    if (m[i] != 0.0) CHECK(std::abs(std::sqrt(w3.norm2(w3.site(i))) - 1.0) <= std::sqrt(3.0) * 0.0625 + 1e-12);
  }
}

TEST_CASE("set sandwich check") {
  const double xi = 0.05;
  const auto w = LatticeWindow::centered(2, xi, 40);
  const ContinuousSet d(2, Ball{{}, 1.0});
  auto ball_sites = [&](double r) {
    SiteMask a(w.size(), 0);
    for (std::size_t i = 0; i < w.size(); ++i) a[i] = w.norm2(w.site(i)) < r * r;
    return a;
  };
  CHECK(set_sandwich_check(ball_sites(1.0), w, d, 2 * xi));
  CHECK_FALSE(set_sandwich_check(SiteMask(w.size(), 0), w, d, 0.01));
  CHECK(set_sandwich_check(ball_sites(1.5), w, d, 0.6));
  CHECK_FALSE(set_sandwich_check(ball_sites(1.5), w, d, 0.4));
  const double eps = minimal_sandwich_eps(ball_sites(1.5), w, d);
  CHECK(eps > 0.4);
  CHECK(eps <= 0.5);
}

TEST_CASE("unit ball volumes and sphere areas") {
  CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
  CHECK(unit_sphere_area(2) == doctest::Approx(2.0 * M_PI));
  CHECK(unit_sphere_area(3) == doctest::Approx(4.0 * M_PI));
}

TEST_CASE("grid csv round trip") {
  for (int d : {2, 3}) {
    const LatticeWindow w(d, 0.125, Site{-2, -1, d == 3 ? -1 : 0}, Site{3, 2, d == 3 ? 1 : 0});
    std::vector<double> v(w.size());
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (double& x : v) x = g(rng) * 1e-3;
    std::stringstream io;
    write_grid_csv(io, w, v);
    const std::string text = io.str();
    CHECK(text.rfind(d == 2 ? "# d=2 xi=0.125 lo=-2,-1 hi=3,2" : "# d=3 xi=0.125 lo=-2,-1,-1 hi=3,2,1", 0) == 0);
    const GridCsv back = read_grid_csv(io);
    CHECK(back.window == w);
    CHECK(back.values == v);
  }
}
