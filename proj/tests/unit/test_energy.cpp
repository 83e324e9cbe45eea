#include <doctest.h>

#include <random>

#include "gds/energy.hpp"
#include "random_configs.hpp"

using namespace gds;

namespace {

MassConfig random_config(const LatticeWindow& w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MassConfig m(w);
  for (double& v : m.values()) v = u(rng) > 0.2 ? u(rng) : 0.0;
  return m;
}

MassConfig five_site() {
  MassConfig s(LatticeWindow::for_ball(2, 1.0, 2.5));
  s[Site{}] = 1.0;
  for (Site k : {Site{1, 0, 0}, Site{-1, 0, 0}, Site{0, 1, 0}, Site{0, -1, 0}}) s[k] = -1.0;
  return s;
}

GdsResult audited(const MassConfig& s, double R, double tol = 1e-10) {
  GdsOptions o;
  o.R = R;
  o.stop_tol = tol;
  o.audit = true;
  return run_gds(s, o);
}

}  // namespace

TEST_CASE("energy basics") {
  const auto w3 = LatticeWindow::centered(3, 1.0, 2);
  const GreenKernel k3 = kernel_for_window(w3);
  CHECK(energy(MassConfig(w3), k3) == 0.0);
  MassConfig unit(w3);
  unit[Site{}] = 1.0;
  CHECK(energy(unit, k3) == doctest::Approx(1.516386).epsilon(1e-6));

  const auto w = LatticeWindow::centered(2, 0.5, 5);
  const GreenKernel k = kernel_for_window(w);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const MassConfig a = random_config(w, seed), b = random_config(w, seed + 10);
    MassConfig sum(w);
    for (std::size_t i = 0; i < w.size(); ++i) sum[i] = a[i] + b[i];
    const double eab = mutual_energy(a, b, k), eba = mutual_energy(b, a, k);
    CHECK(eab == doctest::Approx(eba).epsilon(1e-10));
    CHECK(mutual_energy(a, a, k) == energy(a, k));
    CHECK(mutual_energy(a, MassConfig(w), k) == 0.0);
    CHECK(energy(sum, k) == doctest::Approx(energy(a, k) + 2.0 * eab + energy(b, k)).epsilon(1e-10));
  }
}

TEST_CASE("the d=2 additive constant shifts E by C (xi^d sum eta)^2") {
  const auto w = LatticeWindow::centered(2, 0.25, 4);
  const GreenKernel k = kernel_for_window(w);
  const MassConfig a = random_config(w, 4);
  const double c = k.constant();
  const double mass = total_mass(a);
  CHECK(energy(a, k) == doctest::Approx(energy(a, k.with_constant(0.0)) + c * mass * mass).epsilon(1e-10));
}

TEST_CASE("audit of a run without topplings") {
  MassConfig s(LatticeWindow::for_ball(2, 1.0, 3.0));
  s[Site{}] = -1.0;
  const GdsResult r = audited(s, 3.0);
  const EnergyAudit a = audit_run(r, s, kernel_for_window(s.window()));
  CHECK(a.n_topplings == 0);
  CHECK(a.e_sigma_minus_nu_direct == 0.0);
  CHECK(a.e_sigma_minus_nu_series == 0.0);
  CHECK(a.passed);
}

TEST_CASE("audit of the five-site example") {
  const MassConfig s = five_site();
  const GdsResult r = audited(s, 2.5, 1e-12);
  const EnergyAudit a = audit_run(r, s, kernel_for_window(s.window()));
  CHECK(a.n_topplings == 1);
  CHECK(a.predicted_drop_total == -1.0);
  CHECK(a.drops_checked == 1);
  CHECK(a.max_drop_err <= 1e-10);
  CHECK(a.e_sigma_minus_nu_series == 1.0);
  CHECK(a.e_sigma_minus_nu_direct == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.passed);
}

TEST_CASE("audit requires a trace") {
  const MassConfig s = five_site();
  GdsOptions o;
  o.R = 2.5;
  const GdsResult r = run_gds(s, o);
  CHECK_THROWS_WITH_AS(audit_run(r, s, kernel_for_window(s.window())), doctest::Contains("trace"), InvalidArgument);
}

TEST_CASE("energy identities on random runs") {
  for (int d : {2, 3}) {
    const double R = d == 2 ? 8.0 : 4.0;
    for (double xi : {1.0, 0.5}) {
      const MassConfig s = testing::random_admissible(d, xi, R * xi, 50 + d);
      const GdsResult r = audited(s, R * xi);
      AuditOptions ao;
      ao.checkpoint_every = 100;
      const EnergyAudit a = audit_run(r, s, kernel_for_window(s.window()), ao);
      CHECK(a.checkpoints >= 2);
      CHECK(a.max_checkpoint_err <= 1e-8);
      CHECK(a.drops_checked > 0);
      CHECK(a.max_drop_err <= 1e-10);
      CHECK(a.max_drop_positive == 0.0);
      CHECK(a.series_err <= 1e-7);
      CHECK(a.passed);
      for (std::size_t j = 1; j < a.energy_series.size(); ++j) {
        CHECK(a.energy_series[j] <= a.energy_series[j - 1] + 1e-9 * std::abs(a.e0));
      }
    }
  }
}

TEST_CASE("minimizer check") {
  SUBCASE("nu~ = nu") {
    const MassConfig s = five_site();
    const GdsResult r = audited(s, 2.5, 1e-12);
    MinimizerOptions mo;
    mo.R = 2.5;
    mo.perturbation_scale = 0.0;
    mo.trials = 3;
    const auto rep = verify_minimizer(s, r.nu, kernel_for_window(s.window()), mo);
    CHECK(rep.max_violation == 0.0);
    CHECK(rep.min_first_order == 0.0);
  }
  SUBCASE("five-site competitor moving mass between neighbours") {
    const MassConfig s = five_site();
    const GdsResult r = audited(s, 2.5, 1e-12);
    const GreenKernel k = kernel_for_window(s.window());
    MassConfig tilde = r.nu;
    tilde[Site{1, 0, 0}] += 0.1;
    tilde[Site{0, 1, 0}] -= 0.1;
    MassConfig a(s.window()), b(s.window());
    for (std::size_t i = 0; i < s.size(); ++i) {
      a[i] = s[i] - r.nu[i];
      b[i] = s[i] - tilde[i];
    }
    CHECK(energy(b, k) >= energy(a, k));
  }
  SUBCASE("random instance") {
    const MassConfig s = testing::random_admissible(2, 1.0, 8.0, 21, 0.9, 0.9);
    const GdsResult r = audited(s, 8.0);
    MinimizerOptions mo;
    mo.R = 8.0;
    mo.trials = 20;
    const auto rep = verify_minimizer(s, r.nu, kernel_for_window(s.window()), mo);
    CHECK(rep.trials_run + rep.trials_skipped == 20);
    CHECK(rep.trials_run >= 13);
    CHECK(rep.max_violation <= 1e-8 * std::abs(rep.e_sigma_minus_nu));
    CHECK(rep.min_first_order >= -1e-8 * rep.first_order_scale);
  }
}
