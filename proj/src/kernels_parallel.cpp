#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "gds/kernels.hpp"

namespace gds::kernels::parallel {

void potential_sum(const GreenKernel& kernel, const MassConfig& mu,
                   std::span<const std::size_t> support, LatticeField& out) {
  const auto& w = mu.window();
  const int d = w.dim();
  std::vector<Site> sites(support.size());
  std::vector<double> mass(support.size());
  for (std::size_t j = 0; j < support.size(); ++j) {
    sites[j] = w.site(support[j]);
    mass[j] = mu[support[j]];
  }
  const auto g = kernel.orthant();
  const std::ptrdiff_t s0 = kernel.orthant_stride(0), s1 = kernel.orthant_stride(1),
                       s2 = d == 3 ? kernel.orthant_stride(2) : 0;
  const double vol = w.cell_volume();
  const auto n = static_cast<std::ptrdiff_t>(w.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Site x = w.site(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t j = 0; j < sites.size(); ++j) {
      const Site& y = sites[j];
      const std::ptrdiff_t idx =
          std::abs(x[0] - y[0]) * s0 + std::abs(x[1] - y[1]) * s1 + std::abs(x[2] - y[2]) * s2;
      acc += g[idx] * mass[j];
    }
    out[static_cast<std::size_t>(i)] = vol * acc;
  }
}

namespace {

// Empties every positive site of `senders` into scratch, then lets each
// receiver pull its share. Returns the mass emitted in this half round.
SweepStats half_round(const SweepGeometry& g, const std::vector<std::size_t>& senders,
                      const SweepGeometry::Pull& pull, std::span<double> mass, std::span<double> emitted,
                      std::span<double> scratch) {
  const auto ns = static_cast<std::ptrdiff_t>(senders.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < ns; ++s) {
    const std::size_t i = senders[static_cast<std::size_t>(s)];
    const double m = mass[i];
    if (m > 0.0) {
      mass[i] = 0.0;
      scratch[i] = m;
      emitted[i] += m;
    }
  }
  const double share = 1.0 / (2.0 * g.d);
  const auto nr = static_cast<std::ptrdiff_t>(pull.site.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < nr; ++r) {
    double in = 0.0;
    for (std::size_t k = pull.begin[r]; k < pull.begin[r + 1]; ++k) in += scratch[pull.from[k]];
    if (in != 0.0) mass[pull.site[r]] += in * share;
  }
  // Serial, fixed-order total so the diagnostic does not depend on threads.
  SweepStats st;
  for (std::size_t i : senders) {
    if (scratch[i] > 0.0) {
      st.emitted += scratch[i];
      ++st.topplings;
      scratch[i] = 0.0;
    }
  }
  return st;
}

}  // namespace

SweepStats topple_red_black(const SweepGeometry& g, std::span<double> mass, std::span<double> emitted,
                            std::span<double> scratch) {
  const SweepStats red = half_round(g, g.red, g.from_red, mass, emitted, scratch);
  const SweepStats black = half_round(g, g.black, g.from_black, mass, emitted, scratch);
  return {red.emitted + black.emitted, red.topplings + black.topplings};
}

namespace {

double obstacle_half(const SweepGeometry& g, const std::vector<std::size_t>& sites, std::span<double> v,
                     std::span<const double> obstacle, double omega) {
  const double inv = 1.0 / (2.0 * g.d);
  double worst = 0.0;
  const auto n = static_cast<std::ptrdiff_t>(sites.size());
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    const std::size_t i = sites[static_cast<std::size_t>(s)];
    double sum = 0.0;
    for (int a = 0; a < g.d; ++a) sum += v[i - g.stride[a]] + v[i + g.stride[a]];
    const double old = v[i];
    const double next = std::min(obstacle[i], old + omega * (sum * inv - old));
    v[i] = next;
    worst = std::max(worst, std::abs(next - old));
  }
  return worst;
}

}  // namespace

double obstacle_red_black(const SweepGeometry& g, std::span<double> v,
                          std::span<const double> obstacle, double omega) {
  const double a = obstacle_half(g, g.red, v, obstacle, omega);
  const double b = obstacle_half(g, g.black, v, obstacle, omega);
  return std::max(a, b);
}

}  // namespace gds::kernels::parallel
