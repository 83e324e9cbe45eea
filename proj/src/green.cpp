#include "gds/green.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "gds/grid_io.hpp"
#include "gds/kernels.hpp"

namespace gds {

namespace {

using Key = std::array<int, kMaxDim>;

Key canonical(int d, Site z) {
  Key k{};
  for (int a = 0; a < d; ++a) k[a] = std::abs(z[a]);
  std::sort(k.begin(), k.begin() + d);
  return k;
}

using boost::math::quadrature::gauss;

// Both kernels come from the continuous-time walk, whose coordinates are
// independent and carry modified Bessel weights e^{-x} I_n(x):
//   d = 3:  G(z) = 3 int_0^inf prod_i e^{-x} I_{z_i}(x) dx
//   d = 2:  a(z) = 2 int_0^inf e^{-2x} (I_0(x)^2 - I_{z1}(x) I_{z2}(x)) dx
// The scaled Bessel values are computed once per node for every order up to
// N, so a whole table costs one dot product per offset. [0,1] and [1,X] (in
// log x) use Gauss-Legendre; the tail past X = 60 N^2 is integrated from the
// large-x expansion, which converges fast there.
constexpr int kTailTerms = 10;
using Gl = gauss<double, 30>;

struct BesselNodes {
  int order = 0;          // N
  double X = 0.0;         // start of the analytic tail
  std::vector<double> w;  // quadrature weights in x
  std::vector<double> s;  // s[n * nodes + k] = e^{-x_k} I_n(x_k)
  std::size_t nodes() const { return w.size(); }
  const double* row(int n) const { return s.data() + static_cast<std::size_t>(n) * nodes(); }
};

// e^{-x} I_n(x) for n = 0..N by Miller's backward recurrence, normalized by
// e^x = I_0 + 2 sum_{n>=1} I_n.
void scaled_bessel(double x, int N, double* out, std::size_t stride) {
  const int top = N + 30 + static_cast<int>(std::ceil(10.0 * std::sqrt(x)));
  std::vector<double> keep(N + 1, 0.0);
  double next = 0.0, cur = 1e-280, sum = 0.0;
  for (int n = top; n >= 1; --n) {
    const double prev = 2.0 * n / x * cur + next;  // I_{n-1}
    sum += 2.0 * cur;
    if (n <= N) keep[n] = cur;
    next = cur;
    cur = prev;
    if (cur > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      sum *= 1e-250;
      for (int m = n; m <= N; ++m) keep[m] *= 1e-250;
    }
  }
  keep[0] = cur;
  sum += cur;
  for (int n = 0; n <= N; ++n) out[n * stride] = keep[n] / sum;
}

BesselNodes make_nodes(int N) {
  BesselNodes b;
  b.order = N;
  b.X = std::max(2000.0, 60.0 * N * N);
  std::vector<double> xs;
  auto panel = [&](double lo, double hi, bool logscale) {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const auto& a = Gl::abscissa();
    const auto& wt = Gl::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (double sgn : {-1.0, 1.0}) {
        if (a[i] == 0.0 && sgn > 0.0) continue;
        const double t = c + sgn * h * a[i];
        const double x = logscale ? std::exp(t) : t;
        xs.push_back(x);
        b.w.push_back(h * wt[i] * (logscale ? x : 1.0));
      }
    }
  };
  panel(0.0, 1.0, false);
  const double top = std::log(b.X);
  const int panels = static_cast<int>(std::ceil(top / 0.25));
  for (int p = 0; p < panels; ++p) panel(top * p / panels, top * (p + 1) / panels, true);
  const std::size_t K = xs.size();
  b.s.assign(static_cast<std::size_t>(N + 1) * K, 0.0);
  const auto nk = static_cast<std::ptrdiff_t>(K);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t k = 0; k < nk; ++k) scaled_bessel(xs[k], N, b.s.data() + k, K);
  return b;
}

// Coefficients of sqrt(2 pi x) e^{-x} I_n(x) ~ sum_k c_k x^{-k}.
std::array<double, kTailTerms> hankel(int n) {
  std::array<double, kTailTerms> c{};
  const double mu = 4.0 * n * n;
  c[0] = 1.0;
  for (int k = 1; k < kTailTerms; ++k) {
    const double j = 2.0 * k - 1.0;
    c[k] = -c[k - 1] * (mu - j * j) / (8.0 * k);
  }
  return c;
}

std::array<double, kTailTerms> times(const std::array<double, kTailTerms>& a, const std::array<double, kTailTerms>& b) {
  std::array<double, kTailTerms> c{};
  for (int i = 0; i < kTailTerms; ++i)
    for (int j = 0; i + j < kTailTerms; ++j) c[i + j] += a[i] * b[j];
  return c;
}

double unit_from_nodes(const BesselNodes& b, int d, const Key& k) {
  const std::size_t K = b.nodes();
  long double acc = 0.0L;
  if (d == 3) {
    const double *p = b.row(k[0]), *q = b.row(k[1]), *r = b.row(k[2]);
    for (std::size_t i = 0; i < K; ++i) acc += b.w[i] * p[i] * q[i] * r[i];
    const auto c = times(times(hankel(k[0]), hankel(k[1])), hankel(k[2]));
    long double tail = 0.0L;
    for (int m = 0; m < kTailTerms; ++m) tail += c[m] * std::pow(b.X, -0.5 - m) / (m + 0.5);
    return static_cast<double>(3.0L * acc + 3.0L * tail / std::pow(2.0 * std::numbers::pi, 1.5));
  }
  if (k[0] == 0 && k[1] == 0) return 0.0;
  const double *z = b.row(0), *p = b.row(k[0]), *q = b.row(k[1]);
  for (std::size_t i = 0; i < K; ++i) acc += b.w[i] * (z[i] * z[i] - p[i] * q[i]);
  const auto c0 = times(hankel(0), hankel(0));
  const auto cz = times(hankel(k[0]), hankel(k[1]));
  long double tail = 0.0L;
  for (int m = 1; m < kTailTerms; ++m) tail += (c0[m] - cz[m]) * std::pow(b.X, -m) / m;
  return static_cast<double>(2.0L * acc + 2.0L * tail / (2.0 * std::numbers::pi));
}

struct UnitCache {
  std::mutex mu;
  std::map<Key, double> values[kMaxDim + 1];
};

UnitCache& cache() {
  static UnitCache c;
  return c;
}

double cached_unit(int d, const Key& k) {
  auto& c = cache();
  {
    std::lock_guard lock(c.mu);
    auto it = c.values[d].find(k);
    if (it != c.values[d].end()) return it->second;
  }
  const double v = unit_from_nodes(make_nodes(k[d - 1]), d, k);
  std::lock_guard lock(c.mu);
  c.values[d].emplace(k, v);
  return v;
}

// Fills the cache for every canonical offset in [0,radius]^d.
void warm_cache(int d, int radius) {
  std::vector<Key> missing;
  {
    auto& c = cache();
    std::lock_guard lock(c.mu);
    Key k{};
    if (d == 2) {
      for (int y = 0; y <= radius; ++y)
        for (int x = 0; x <= y; ++x) {
          k = {x, y, 0};
          if (!c.values[2].count(k)) missing.push_back(k);
        }
    } else {
      for (int z = 0; z <= radius; ++z)
        for (int y = 0; y <= z; ++y)
          for (int x = 0; x <= y; ++x) {
            k = {x, y, z};
            if (!c.values[3].count(k)) missing.push_back(k);
          }
    }
  }
  if (missing.empty()) return;
  const BesselNodes b = make_nodes(radius);
  std::vector<double> computed(missing.size());
  const auto n = static_cast<std::ptrdiff_t>(missing.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) computed[i] = unit_from_nodes(b, d, missing[i]);
  auto& c = cache();
  std::lock_guard lock(c.mu);
  for (std::size_t i = 0; i < missing.size(); ++i) c.values[d].emplace(missing[i], computed[i]);
}

void check_dim(int d) {
  if (d != 2 && d != 3) throw InvalidArgument("green kernels are available for d = 2 and d = 3");
}

}  // namespace

double potential_kernel_2d(int x, int y) { return cached_unit(2, canonical(2, {x, y, 0})); }

double greens_function_3d(int x, int y, int z) { return cached_unit(3, canonical(3, {x, y, z})); }

double greens_function_transient(const Site& z, int d) {
  if (d != 3) throw InvalidArgument("transient Green's function implemented for d = 3");
  return greens_function_3d(z[0], z[1], z[2]);
}

double published_constant_2d(double xi) { return 2.0 / std::numbers::pi * std::log(xi); }

double continuum_constant_2d(double xi) {
  return 2.0 / std::numbers::pi * (std::numbers::egamma + 1.5 * std::numbers::ln2 - std::log(xi));
}

// ---------------------------------------------------------------------------

GreenKernel::GreenKernel(int d, double xi, int radius, double constant, std::vector<double> unit_values)
    : d_(d), xi_(xi), radius_(radius), constant_(d == 2 ? constant : 0.0), unit_(std::move(unit_values)) {
  check_dim(d);
  if (radius < 1) throw InvalidArgument("kernel radius must be at least 1");
  std::ptrdiff_t s = 1;
  for (int a = d - 1; a >= 0; --a) {
    stride_[a] = s;
    s *= radius + 1;
  }
  if (unit_.size() != static_cast<std::size_t>(s)) throw InvalidArgument("kernel table size mismatch");
  g_.resize(unit_.size());
  const double scale = d == 2 ? 1.0 : std::pow(xi, 2 - d);
  for (std::size_t i = 0; i < unit_.size(); ++i) {
    g_[i] = d == 2 ? constant_ - unit_[i] : scale * unit_[i];
  }
}

std::size_t GreenKernel::slot(const Site& z) const {
  std::ptrdiff_t i = 0;
  for (int a = 0; a < d_; ++a) {
    const int c = std::abs(z[a]);
    if (c > radius_) throw InvalidArgument("kernel radius insufficient");
    i += c * stride_[a];
  }
  return static_cast<std::size_t>(i);
}

double GreenKernel::operator()(const Site& offset) const { return g_[slot(offset)]; }

double GreenKernel::unit(const Site& offset) const { return unit_[slot(offset)]; }

GreenKernel GreenKernel::with_constant(double constant) const {
  return GreenKernel(d_, xi_, radius_, constant, unit_);
}

double GreenKernel::harmonicity_residual() const {
  double worst = 0.0;
  const int r = radius_ - 1;
  Site z{};
  const int nz = d_ == 3 ? r : 0;
  for (z[0] = 0; z[0] <= r; ++z[0])
    for (z[1] = 0; z[1] <= r; ++z[1])
      for (z[2] = 0; z[2] <= nz; ++z[2]) {
        double mean = 0.0;
        for (int a = 0; a < d_; ++a) {
          Site m = z, p = z;
          --m[a];
          ++p[a];
          mean += unit(m) + unit(p);
        }
        mean /= 2.0 * d_;
        const double lhs = d_ == 2 ? mean - unit(z) : unit(z) - mean;
        const double delta = (z == Site{}) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(lhs - delta));
      }
  return worst;
}

GreenKernel kernel_table(int d, double xi, int radius) {
  check_dim(d);
  if (!(xi > 0.0)) throw InvalidArgument("lattice spacing must be positive");
  if (radius < 1) throw InvalidArgument("kernel radius must be at least 1");
  warm_cache(d, radius);
  const std::size_t n = static_cast<std::size_t>(std::pow(radius + 1, d));
  std::vector<double> unit(n);
  auto& c = cache();
  std::lock_guard lock(c.mu);
  for (std::size_t i = 0; i < n; ++i) {
    Site z{};
    std::size_t rem = i;
    for (int a = d - 1; a >= 0; --a) {
      z[a] = static_cast<int>(rem % (radius + 1));
      rem /= radius + 1;
    }
    unit[i] = c.values[d].at(canonical(d, z));
  }
  return GreenKernel(d, xi, radius, published_constant_2d(xi), std::move(unit));
}

GreenKernel kernel_for_window(const LatticeWindow& window) {
  int diameter = 1;
  for (int a = 0; a < window.dim(); ++a) diameter = std::max(diameter, window.extent(a) - 1);
  return kernel_table(window.dim(), window.xi(), diameter);
}

namespace {

std::vector<std::size_t> support_of(const MassConfig& mu) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] != 0.0) s.push_back(i);
  return s;
}

void check_radius(const MassConfig& mu, const GreenKernel& kernel) {
  const auto& w = mu.window();
  if (kernel.dim() != w.dim()) throw InvalidArgument("kernel dimension mismatch");
  if (std::abs(kernel.xi() - w.xi()) > 1e-14 * w.xi()) throw InvalidArgument("kernel spacing mismatch");
  for (int a = 0; a < w.dim(); ++a) {
    if (w.extent(a) - 1 > kernel.radius()) throw InvalidArgument("kernel radius insufficient");
  }
}

}  // namespace

LatticeField potential(const MassConfig& mu, const GreenKernel& kernel, Execution exec) {
  check_radius(mu, kernel);
  LatticeField out(mu.window());
  const auto support = support_of(mu);
  if (exec == Execution::kParallel) {
    kernels::parallel::potential_sum(kernel, mu, support, out);
  } else {
    kernels::serial::potential_sum(kernel, mu, support, out);
  }
  return out;
}

double potential_at(const MassConfig& mu, const GreenKernel& kernel, const Site& x) {
  const auto& w = mu.window();
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] == 0.0) continue;
    const Site y = w.site(i);
    Site z{};
    for (int a = 0; a < w.dim(); ++a) z[a] = x[a] - y[a];
    acc += kernel(z) * mu[i];
  }
  return w.cell_volume() * acc;
}

void write_kernel_csv(const std::string& path, const GreenKernel& kernel) {
  Site lo{}, hi{};
  for (int a = 0; a < kernel.dim(); ++a) hi[a] = kernel.radius();
  LatticeWindow w(kernel.dim(), kernel.xi(), lo, hi);
  write_grid_csv(path, w, kernel.orthant(), "kernel ");
}

GreenKernel read_kernel_csv(const std::string& path) {
  GridCsv csv = read_grid_csv(path);
  if (csv.prefix != "kernel") throw InvalidArgument("'" + path + "' is not a kernel table");
  const auto& w = csv.window;
  const int d = w.dim();
  for (int a = 0; a < d; ++a) {
    if (w.lo()[a] != 0 || w.hi()[a] != w.hi()[0]) throw InvalidArgument("kernel table must be a cube orthant");
  }
  const double xi = w.xi();
  std::vector<double> unit(csv.values.size());
  double constant = 0.0;
  if (d == 2) {
    constant = csv.values[0];  // a(0) = 0
    for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = constant - csv.values[i];
  } else {
    const double scale = std::pow(xi, d - 2);
    for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = scale * csv.values[i];
  }
  return GreenKernel(d, xi, w.hi()[0], constant, std::move(unit));
}

}  // namespace gds
