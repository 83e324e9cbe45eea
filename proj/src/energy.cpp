#include "gds/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace gds {

namespace {

long double weighted_sum(std::span<const double> a, std::span<const double> b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] != 0.0) s += static_cast<long double>(a[i]) * b[i];
  }
  return s;
}

void require_same_window(const MassConfig& a, const MassConfig& b) {
  if (!(a.window() == b.window())) throw InvalidArgument("configurations use different windows");
}

double rel(double a, double b, double scale) {
  const double s = std::max({std::abs(a), std::abs(b), scale, 1e-300});
  return std::abs(a - b) / s;
}

}  // namespace

double energy(const MassConfig& eta, const GreenKernel& kernel, Execution exec) {
  return mutual_energy(eta, eta, kernel, exec);
}

double mutual_energy(const MassConfig& eta, const MassConfig& kappa, const GreenKernel& kernel, Execution exec) {
  require_same_window(eta, kappa);
  const LatticeField U = potential(eta, kernel, exec);
  return static_cast<double>(eta.window().cell_volume() * weighted_sum(U.values(), kappa.values()));
}

EnergyAudit audit_run(const GdsResult& result, const MassConfig& sigma, const GreenKernel& kernel,
                      const AuditOptions& opt) {
  if (!result.audited) throw InvalidArgument("missing per-toppling trace; rerun with audit enabled");
  const auto& w = sigma.window();
  if (!(w == result.nu.window())) throw InvalidArgument("result and sigma use different windows");
  const int d = w.dim();
  const double xi = w.xi(), xi2 = xi * xi, xd = w.cell_volume(), xd2 = xd * xi2;

  EnergyAudit a;
  a.n_topplings = static_cast<long>(result.trace.size());
  const LatticeField Us = potential(sigma, kernel);
  MassConfig sigma_abs(w);
  std::size_t support = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    sigma_abs[i] = std::abs(sigma[i]);
    if (sigma[i] != 0.0) ++support;
  }
  // Bound on xi^d sum |g(x-y)| |sigma(y)|. In d = 2, g = C - a changes sign,
  // so use |g| <= |C| + a.
  LatticeField Us_abs = potential(sigma_abs, kernel);
  if (d == 2) {
    const LatticeField a_part = potential(sigma_abs, kernel.with_constant(0.0));
    const double c_part = std::abs(kernel.constant()) * total_mass(sigma_abs);
    for (std::size_t i = 0; i < w.size(); ++i) Us_abs[i] = c_part - a_part[i];
  }
  a.e0 = static_cast<double>(xd * weighted_sum(Us.values(), sigma.values()));

  // E[k] for the unit toppling profile k = -delta_0 + (1/2d) sum_{y~0} delta_y,
  // from the kernel table directly.
  std::vector<Site> stencil{Site{}};
  std::vector<double> weight{-1.0};
  for (const Site& y : neighbors(Site{}, w)) {
    stencil.push_back(y);
    weight.push_back(1.0 / (2.0 * d));
  }
  long double c_k = 0.0L, c_abs = 0.0L;
  for (std::size_t p = 0; p < stencil.size(); ++p) {
    for (std::size_t q = 0; q < stencil.size(); ++q) {
      Site off{};
      for (int ax = 0; ax < d; ++ax) off[ax] = stencil[p][ax] - stencil[q][ax];
      const long double t = static_cast<long double>(kernel(off)) * weight[p] * weight[q];
      c_k += t;
      c_abs += std::abs(t);
    }
  }
  std::vector<std::ptrdiff_t> offsets;
  for (const Site& y : stencil) {
    std::ptrdiff_t o = 0;
    for (int ax = 0; ax < d; ++ax) o += y[ax] * w.stride(ax);
    offsets.push_back(o);
  }
  const double rel_err = opt.kernel_rel_err + 2.2e-16 * std::sqrt(static_cast<double>(std::max<std::size_t>(support, 1)));

  const long every = opt.checkpoint_every > 0 ? opt.checkpoint_every : std::max(100L, a.n_topplings / 200);
  MassConfig eta = sigma;
  std::vector<double> emitted(w.size(), 0.0);
  long double sum_sq = 0.0L, series = 0.0L;

  auto checkpoint = [&](long step) {
    const double direct = energy(eta, kernel);
    const double predicted = static_cast<double>(a.e0 - xd2 * sum_sq);
    a.max_checkpoint_err =
        std::max(a.max_checkpoint_err, rel(direct, predicted, static_cast<double>(xd2 * sum_sq)));
    a.checkpoint_steps.push_back(step);
    a.energy_series.push_back(direct);
    ++a.checkpoints;
  };

  checkpoint(0);
  const double share = 1.0 / (2.0 * d);
  for (long j = 0; j < a.n_topplings; ++j) {
    const Toppling& t = result.trace[static_cast<std::size_t>(j)];
    const std::size_t i = t.site;
    const double m = t.emitted;
    if (i >= w.size() || eta[i] != m || !(m > 0.0)) {
      throw InvalidArgument("trace does not replay on sigma at toppling " + std::to_string(j + 1));
    }

    // Direct drop 2 E[eta, m k] + E[m k], with U^eta = U^sigma - u.
    long double inner = 0.0L, inner_abs = 0.0L;
    for (std::size_t p = 0; p < offsets.size(); ++p) {
      const auto y = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + offsets[p]);
      const long double val = static_cast<long double>(Us[y]) - static_cast<long double>(xi2) * emitted[y];
      inner += weight[p] * val;
      inner_abs += std::abs(weight[p]) * (Us_abs[y] + xi2 * std::abs(emitted[y]));
    }
    const long double lm = m;
    const long double direct = 2.0L * xd * lm * inner + static_cast<long double>(xd) * xd * lm * lm * c_k;
    const long double predicted = -static_cast<long double>(xd2) * lm * lm;
    const long double bound = rel_err * (2.0L * xd * lm * inner_abs + static_cast<long double>(xd) * xd * lm * lm * c_abs);
    if (bound <= 0.1L * opt.drop_rtol * std::abs(predicted)) {
      ++a.drops_checked;
      a.max_drop_err = std::max(a.max_drop_err, static_cast<double>(std::abs(direct - predicted) / std::abs(predicted)));
      if (direct > 0.0L) a.max_drop_positive = std::max(a.max_drop_positive, static_cast<double>(direct));
    } else {
      ++a.drops_unresolved;
    }

    sum_sq += lm * lm;
    series += lm * (2.0L * sigma[i] - lm);
    eta[i] = 0.0;
    const double q = m * share;
    for (int ax = 0; ax < d; ++ax) {
      eta[i - w.stride(ax)] += q;
      eta[i + w.stride(ax)] += q;
    }
    emitted[i] += m;
    if ((j + 1) % every == 0) checkpoint(j + 1);
  }
  if (a.n_topplings % every != 0) checkpoint(a.n_topplings);
  if (!(eta == result.nu)) throw InvalidArgument("trace replay does not reproduce the final configuration");

  a.predicted_drop_total = static_cast<double>(-xd2 * sum_sq);
  MassConfig diff(w);
  for (std::size_t i = 0; i < w.size(); ++i) diff[i] = sigma[i] - eta[i];
  a.e_sigma_minus_nu_direct = energy(diff, kernel);
  a.e_sigma_minus_nu_series = static_cast<double>(xd2 * series);
  a.series_err = rel(a.e_sigma_minus_nu_direct, a.e_sigma_minus_nu_series, 0.0);
  if (a.e_sigma_minus_nu_direct == 0.0 && a.e_sigma_minus_nu_series == 0.0) a.series_err = 0.0;

  a.passed = a.max_drop_err <= opt.drop_rtol && a.max_drop_positive == 0.0 &&
             a.max_checkpoint_err <= opt.checkpoint_rtol && a.series_err <= opt.series_rtol;
  return a;
}

MinimizerReport verify_minimizer(const MassConfig& sigma, const MassConfig& nu, const GreenKernel& kernel,
                                 const MinimizerOptions& opt) {
  require_same_window(sigma, nu);
  if (opt.trials < 1) throw InvalidArgument("trials must be >= 1");
  const auto& w = sigma.window();
  const ConfiningBall ball(w, opt.R);
  const double xd = w.cell_volume();

  MassConfig base(w);
  for (std::size_t i = 0; i < w.size(); ++i) base[i] = sigma[i] - nu[i];
  const LatticeField U = potential(base, kernel);
  MinimizerReport rep;
  rep.e_sigma_minus_nu = static_cast<double>(xd * weighted_sum(U.values(), base.values()));
  // u = U^{sigma - nu}, the odometer.
  double u_max = 0.0;
  for (std::size_t i : ball.sites()) u_max = std::max(u_max, U[i]);

  const double delta0 = opt.perturbation_scale * max_abs(sigma.values());
  std::vector<std::size_t> region, boundary_pos;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (ball.inside(i) || ball.on_boundary(i)) region.push_back(i);
    if (ball.on_boundary(i) && nu[i] > 0.0) boundary_pos.push_back(i);
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](const std::vector<std::size_t>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };

  rep.max_violation = -std::numeric_limits<double>::infinity();
  rep.min_first_order = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < opt.trials; ++trial) {
    const double delta = delta0 * (0.5 + 0.5 * unit(rng));
    std::vector<std::size_t> sinks;
    for (std::size_t i : ball.sites()) {
      if (nu[i] <= -delta) sinks.push_back(i);
    }
    MassConfig tilde = nu;
    const int kind = trial % 3;
    if (sinks.empty() || (kind == 1 && boundary_pos.empty())) {
      ++rep.trials_skipped;
      continue;
    }
    if (kind == 0) {
      // Move delta from any site of the region to a site with room below 0.
      const std::size_t a = pick(sinks);
      std::size_t b = pick(region);
      while (b == a) b = pick(region);
      tilde[a] += delta;
      tilde[b] -= delta;
    } else if (kind == 1) {
      // Pull boundary mass back into the ball.
      const std::size_t b = pick(boundary_pos);
      const double take = std::min(delta, nu[b]);
      tilde[pick(sinks)] += take;
      tilde[b] -= take;
    } else {
      // Spread delta over three sinks, taken from one site.
      double wts[3], tot = 0.0;
      for (double& x : wts) tot += (x = 0.1 + unit(rng));
      for (double x : wts) tilde[pick(sinks)] += delta * x / tot;
      tilde[pick(region)] -= delta;
    }
    MassConfig tb(w);
    long double first = 0.0L, size = 0.0L;
    for (std::size_t i = 0; i < w.size(); ++i) {
      tb[i] = sigma[i] - tilde[i];
      const double dn = nu[i] - tilde[i];
      if (dn != 0.0) {
        first += static_cast<long double>(U[i]) * dn;
        size += std::abs(dn);
      }
    }
    const double e_tilde = energy(tb, kernel);
    rep.max_violation = std::max(rep.max_violation, rep.e_sigma_minus_nu - e_tilde);
    rep.min_first_order = std::min(rep.min_first_order, static_cast<double>(xd * first));
    rep.first_order_scale = std::max(rep.first_order_scale, static_cast<double>(xd * u_max * size));
    ++rep.trials_run;
  }
  if (rep.trials_run == 0) {
    rep.max_violation = 0.0;
    rep.min_first_order = 0.0;
  }
  return rep;
}

}  // namespace gds
