#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "gds/kernels.hpp"

#ifdef GDS_HAVE_OPENMP
#include <omp.h>
#endif

namespace gds::kernels {

SweepGeometry make_sweep_geometry(const LatticeWindow& window, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != window.size()) throw InvalidArgument("sweep mask does not match window");
  SweepGeometry g;
  g.d = window.dim();
  for (int a = 0; a < kMaxDim; ++a) g.stride[a] = window.stride(a);

  std::vector<std::uint8_t> colour(window.size(), 0);  // 0 not swept, 1 red, 2 black
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (!mask[i]) continue;
    const Site k = window.site(i);
    int parity = 0;
    for (int a = 0; a < g.d; ++a) {
      if (k[a] <= window.lo()[a] || k[a] >= window.hi()[a]) {
        throw InvalidArgument("swept site has a neighbour outside the window");
      }
      parity += k[a];
    }
    g.order.push_back(i);
    const bool red = std::abs(parity) % 2 == 0;
    (red ? g.red : g.black).push_back(i);
    colour[i] = red ? 1 : 2;
  }
  // a receiver's senders all have the opposite colour, so one scan serves both
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Site k = window.site(i);
    std::size_t before = g.from_red.from.size() + g.from_black.from.size();
    SweepGeometry::Pull* pull = nullptr;
    for (int a = 0; a < g.d; ++a) {
      for (int dir : {-1, 1}) {
        Site n = k;
        n[a] += dir;
        if (!window.contains(n)) continue;
        const std::size_t j = window.index(n);
        if (!colour[j]) continue;
        pull = colour[j] == 1 ? &g.from_red : &g.from_black;
        pull->from.push_back(j);
      }
    }
    if (g.from_red.from.size() + g.from_black.from.size() == before) continue;
    pull->site.push_back(i);
    pull->begin.push_back(pull->from.size());
  }
  return g;
}

namespace serial {

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
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Site x = w.site(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < sites.size(); ++j) {
      const Site& y = sites[j];
      const std::ptrdiff_t idx =
          std::abs(x[0] - y[0]) * s0 + std::abs(x[1] - y[1]) * s1 + std::abs(x[2] - y[2]) * s2;
      acc += g[idx] * mass[j];
    }
    out[i] = vol * acc;
  }
}

SweepStats topple_sweep(const SweepGeometry& g, std::span<double> mass, std::span<double> emitted) {
  const double share = 1.0 / (2.0 * g.d);
  SweepStats st;
  if (g.d == 2) {
    const std::ptrdiff_t s0 = g.stride[0], s1 = g.stride[1];
    for (std::size_t i : g.order) {
      const double m = mass[i];
      if (m <= 0.0) continue;
      mass[i] = 0.0;
      const double q = m * share;
      mass[i - s0] += q;
      mass[i + s0] += q;
      mass[i - s1] += q;
      mass[i + s1] += q;
      emitted[i] += m;
      st.emitted += m;
      ++st.topplings;
    }
  } else {
    const std::ptrdiff_t s0 = g.stride[0], s1 = g.stride[1], s2 = g.stride[2];
    for (std::size_t i : g.order) {
      const double m = mass[i];
      if (m <= 0.0) continue;
      mass[i] = 0.0;
      const double q = m * share;
      mass[i - s0] += q;
      mass[i + s0] += q;
      mass[i - s1] += q;
      mass[i + s1] += q;
      mass[i - s2] += q;
      mass[i + s2] += q;
      emitted[i] += m;
      st.emitted += m;
      ++st.topplings;
    }
  }
  return st;
}

double obstacle_sweep(const SweepGeometry& g, std::span<double> v, std::span<const double> obstacle,
                      double omega) {
  const double inv = 1.0 / (2.0 * g.d);
  double worst = 0.0;
  for (std::size_t i : g.order) {
    double sum = 0.0;
    for (int a = 0; a < g.d; ++a) sum += v[i - g.stride[a]] + v[i + g.stride[a]];
    const double old = v[i];
    const double next = std::min(obstacle[i], old + omega * (sum * inv - old));
    v[i] = next;
    worst = std::max(worst, std::abs(next - old));
  }
  return worst;
}

}  // namespace serial

int thread_count() {
#ifdef GDS_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
#ifdef GDS_HAVE_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace gds::kernels
