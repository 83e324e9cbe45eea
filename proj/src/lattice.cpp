#include "gds/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace gds {

LatticeWindow::LatticeWindow(int d, double xi, Site lo, Site hi) : d_(d), xi_(xi), lo_(lo), hi_(hi) {
  if (d < 2 || d > kMaxDim) {
    throw InvalidArgument("lattice dimension must be 2 or 3, got " + std::to_string(d));
  }
  if (!(xi > 0.0) || !std::isfinite(xi)) {
    throw InvalidArgument("lattice spacing must be positive and finite");
  }
  for (int a = d; a < kMaxDim; ++a) {
    lo_[a] = 0;
    hi_[a] = 0;
  }
  for (int a = 0; a < d; ++a) {
    if (hi_[a] < lo_[a]) throw InvalidArgument("window bounds must satisfy hi >= lo");
  }
  std::ptrdiff_t s = 1;
  for (int a = d - 1; a >= 0; --a) {
    stride_[a] = s;
    s *= extent(a);
  }
  for (int a = d; a < kMaxDim; ++a) stride_[a] = 0;
  size_ = static_cast<std::size_t>(s);
  cell_volume_ = std::pow(xi, d);
}

LatticeWindow LatticeWindow::centered(int d, double xi, int half_width) {
  Site lo{}, hi{};
  for (int a = 0; a < d; ++a) {
    lo[a] = -half_width;
    hi[a] = half_width;
  }
  return {d, xi, lo, hi};
}

LatticeWindow LatticeWindow::for_ball(int d, double xi, double R) {
  if (!(R > 0.0)) throw InvalidArgument("confining radius must be positive");
  // Sites of B(0,R) have |k_i| <= ceil(R/xi) - 1; one more layer holds the outer boundary.
  const int half = static_cast<int>(std::ceil(R / xi - 1e-12));
  return centered(d, xi, std::max(half, 1));
}

bool LatticeWindow::contains(const Site& k) const noexcept {
  for (int a = 0; a < d_; ++a) {
    if (k[a] < lo_[a] || k[a] > hi_[a]) return false;
  }
  return true;
}

std::size_t LatticeWindow::index(const Site& k) const noexcept {
  std::ptrdiff_t i = 0;
  for (int a = 0; a < d_; ++a) i += (k[a] - lo_[a]) * stride_[a];
  return static_cast<std::size_t>(i);
}

Site LatticeWindow::site(std::size_t index) const noexcept {
  Site k{};
  auto rem = static_cast<std::ptrdiff_t>(index);
  for (int a = 0; a < d_; ++a) {
    k[a] = static_cast<int>(rem / stride_[a]) + lo_[a];
    rem %= stride_[a];
  }
  return k;
}

Point LatticeWindow::position(const Site& k) const noexcept {
  Point p{};
  for (int a = 0; a < d_; ++a) p[a] = xi_ * k[a];
  return p;
}

double LatticeWindow::norm2(const Site& k) const noexcept {
  double s = 0.0;
  for (int a = 0; a < d_; ++a) {
    const double x = xi_ * k[a];
    s += x * x;
  }
  return s;
}

int LatticeWindow::radius_in_sites() const noexcept {
  int r = 0;
  for (int a = 0; a < d_; ++a) r = std::max({r, std::abs(lo_[a]), std::abs(hi_[a])});
  return r;
}

double total(const MassConfig& m) {
  double s = 0.0;
  for (double v : m.values()) s += v;
  return s;
}

double total_mass(const MassConfig& m) { return m.window().cell_volume() * total(m); }

double max_abs(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

std::vector<Site> neighbors(const Site& k, const LatticeWindow& window) {
  std::vector<Site> out;
  out.reserve(2 * window.dim());
  for (int a = 0; a < window.dim(); ++a) {
    Site m = k, p = k;
    --m[a];
    ++p[a];
    out.push_back(m);
    out.push_back(p);
  }
  return out;
}

template <class Tag>
double discrete_laplacian(const Grid<Tag>& f, const Site& k, Extension ext) {
  const auto& w = f.window();
  if (!w.contains(k)) throw InvalidArgument("laplacian requested outside the window");
  const double center = f[k];
  double acc = 0.0;
  for (const Site& y : neighbors(k, w)) {
    if (!w.contains(y)) {
      if (ext == Extension::kNone) throw InvalidArgument("missing neighbor");
      acc += 0.0 - center;
    } else {
      acc += f[y] - center;
    }
  }
  return acc / (2.0 * w.dim() * w.xi() * w.xi());
}

template <class Tag>
LatticeField laplacian(const Grid<Tag>& f, Extension ext) {
  const auto& w = f.window();
  LatticeField out(w);
  const int d = w.dim();
  const double scale = 1.0 / (2.0 * d * w.xi() * w.xi());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Site k = w.site(i);
    const double center = f[i];
    double acc = 0.0;
    for (int a = 0; a < d; ++a) {
      const std::ptrdiff_t s = w.stride(a);
      if (k[a] > w.lo()[a]) {
        acc += f[i - s] - center;
      } else if (ext == Extension::kNone) {
        throw InvalidArgument("missing neighbor");
      } else {
        acc -= center;
      }
      if (k[a] < w.hi()[a]) {
        acc += f[i + s] - center;
      } else if (ext == Extension::kNone) {
        throw InvalidArgument("missing neighbor");
      } else {
        acc -= center;
      }
    }
    out[i] = acc * scale;
  }
  return out;
}

template double discrete_laplacian(const Grid<MassTag>&, const Site&, Extension);
template double discrete_laplacian(const Grid<FieldTag>&, const Site&, Extension);
template LatticeField laplacian(const Grid<MassTag>&, Extension);
template LatticeField laplacian(const Grid<FieldTag>&, Extension);

// ---------------------------------------------------------------------------

namespace {

double distance(const Point& a, const Point& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double box_signed_distance(const Box& b, const Point& x, int d) {
  double outside2 = 0.0;
  double inside = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    const double q = std::max(b.lo[i] - x[i], x[i] - b.hi[i]);
    if (q > 0.0) outside2 += q * q;
    inside = std::max(inside, q);
  }
  return outside2 > 0.0 ? std::sqrt(outside2) : std::min(inside, 0.0);
}

}  // namespace

double ContinuousSet::signed_distance(const Point& x) const {
  const int d = d_;
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return distance(x, s.center, d) - s.radius;
        } else if constexpr (std::is_same_v<T, Annulus>) {
          const double r = distance(x, s.center, d);
          return std::max(s.inner - r, r - s.outer);
        } else if constexpr (std::is_same_v<T, Box>) {
          return box_signed_distance(s, x, d);
        } else {
          double best = std::numeric_limits<double>::infinity();
          for (const Ball& b : s.balls) best = std::min(best, distance(x, b.center, d) - b.radius);
          return best;
        }
      },
      shape_);
}

std::pair<Point, Point> ContinuousSet::bounds() const {
  Point lo{}, hi{};
  auto ball_bounds = [&](const Point& c, double r, Point& l, Point& h) {
    for (int i = 0; i < d_; ++i) {
      l[i] = c[i] - r;
      h[i] = c[i] + r;
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          ball_bounds(s.center, s.radius, lo, hi);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          ball_bounds(s.center, s.outer, lo, hi);
        } else if constexpr (std::is_same_v<T, Box>) {
          lo = s.lo;
          hi = s.hi;
        } else {
          for (int i = 0; i < d_; ++i) {
            lo[i] = std::numeric_limits<double>::infinity();
            hi[i] = -std::numeric_limits<double>::infinity();
          }
          for (const Ball& b : s.balls) {
            Point l{}, h{};
            ball_bounds(b.center, b.radius, l, h);
            for (int i = 0; i < d_; ++i) {
              lo[i] = std::min(lo[i], l[i]);
              hi[i] = std::max(hi[i], h[i]);
            }
          }
        }
      },
      shape_);
  return {lo, hi};
}

double ContinuousSet::volume() const {
  const double wd = unit_ball_volume(d_);
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return wd * std::pow(s.radius, d_);
        } else if constexpr (std::is_same_v<T, Annulus>) {
          return wd * (std::pow(s.outer, d_) - std::pow(s.inner, d_));
        } else if constexpr (std::is_same_v<T, Box>) {
          double v = 1.0;
          for (int i = 0; i < d_; ++i) v *= std::max(0.0, s.hi[i] - s.lo[i]);
          return v;
        } else {
          double v = 0.0;
          for (const Ball& b : s.balls) v += wd * std::pow(b.radius, d_);
          return v;
        }
      },
      shape_);
}

bool set_sandwich_check(const SiteMask& a, const LatticeWindow& window, const ContinuousSet& d,
                        double eps) {
  if (a.size() != window.size()) throw InvalidArgument("site mask does not match window");
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double sd = d.signed_distance(window.position(window.site(i)));
    if (a[i]) {
      if (!(sd < eps)) return false;
    } else if (sd < -eps) {
      return false;
    }
  }
  return true;
}

double minimal_sandwich_eps(const SiteMask& a, const LatticeWindow& window, const ContinuousSet& d) {
  if (a.size() != window.size()) throw InvalidArgument("site mask does not match window");
  double eps = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const double sd = d.signed_distance(window.position(window.site(i)));
    eps = std::max(eps, a[i] ? sd : -sd);
  }
  return eps;
}

// ---------------------------------------------------------------------------

Site nearest_site(const Point& x, int d, double xi) {
  Site k{};
  for (int a = 0; a < d; ++a) k[a] = static_cast<int>(std::floor(x[a] / xi + 0.5));
  return k;
}

Site nearest_site(const Point& x, const LatticeWindow& window) {
  const Site k = nearest_site(x, window.dim(), window.xi());
  if (!window.contains(k)) throw InvalidArgument("nearest site lies outside the window");
  return k;
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

namespace {

void add_density(const DensityTerm& term, const LatticeWindow& w, int q, MassConfig& out) {
  const int d = w.dim();
  const double xi = w.xi();
  auto [blo, bhi] = term.support.bounds();
  Site klo{}, khi{};
  for (int a = 0; a < d; ++a) {
    klo[a] = static_cast<int>(std::floor(blo[a] / xi + 0.5));
    khi[a] = static_cast<int>(std::floor(bhi[a] / xi + 0.5));
    if (klo[a] < w.lo()[a] || khi[a] > w.hi()[a]) throw InvalidArgument("window too small");
  }
  const int samples = static_cast<int>(std::pow(q, d));
  Site k = klo;
  while (true) {
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
      Point x{};
      int rem = s;
      for (int a = 0; a < d; ++a) {
        const int j = rem % q;
        rem /= q;
        x[a] = xi * (k[a] + (j + 0.5) / q - 0.5);
      }
      if (term.support.contains(x)) acc += term.value(x);
    }
    out[k] += acc / samples;

    int a = d - 1;
    while (a >= 0 && ++k[a] > khi[a]) {
      k[a] = klo[a];
      --a;
    }
    if (a < 0) break;
  }
}

void add_sphere_layer(const SphereLayerTerm& layer, const LatticeWindow& w,
                      const DiscretizeOptions& opt, std::uint64_t stream, MassConfig& out) {
  const int d = w.dim();
  const double xi = w.xi();
  const double total = layer.t * unit_sphere_area(d) * std::pow(layer.radius, d - 1);
  const double cells = unit_sphere_area(d) * std::pow(layer.radius / xi, d - 1);
  const std::size_t n =
      std::max(opt.min_sphere_samples, static_cast<std::size_t>(opt.sphere_samples_per_cell * cells));
  const double per_sample = total / static_cast<double>(n) / w.cell_volume();

  std::mt19937_64 rng(opt.seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  std::normal_distribution<double> normal;
  for (std::size_t s = 0; s < n; ++s) {
    Point g{};
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int a = 0; a < d; ++a) {
        g[a] = normal(rng);
        norm += g[a] * g[a];
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    Point x{};
    for (int a = 0; a < d; ++a) x[a] = layer.center[a] + layer.radius * g[a] / norm;
    const Site k = nearest_site(x, d, xi);
    if (!w.contains(k)) throw InvalidArgument("window too small");
    out[k] += per_sample;
  }
}

}  // namespace

MassConfig discretize(const SourceTerm& source, const LatticeWindow& window,
                      const DiscretizeOptions& options) {
  if (options.quadrature_points < 1) throw InvalidArgument("quadrature points must be >= 1");
  MassConfig out(window);
  for (const DensityTerm& term : source.densities) {
    if (term.support.dim() != window.dim()) throw InvalidArgument("density dimension mismatch");
    add_density(term, window, options.quadrature_points, out);
  }
  for (const AtomTerm& atom : source.atoms) {
    Site k = nearest_site(atom.at, window.dim(), window.xi());
    if (!window.contains(k)) throw InvalidArgument("window too small");
    out[k] += atom.mass / window.cell_volume();
  }
  std::uint64_t stream = 0;
  for (const SphereLayerTerm& layer : source.layers) add_sphere_layer(layer, window, options, stream++, out);
  return out;
}

std::optional<std::pair<double, double>> analytic_masses(const SourceTerm& source, int d) {
  double pos = 0.0, neg = 0.0;
  auto add = [&](double m) { (m > 0.0 ? pos : neg) += std::abs(m); };
  for (const auto& a : source.atoms) add(a.mass);
  for (const auto& t : source.densities) {
    if (!t.analytic_mass) return std::nullopt;
    add(*t.analytic_mass);
  }
  for (const auto& l : source.layers) add(l.t * unit_sphere_area(d) * std::pow(l.radius, d - 1));
  return std::make_pair(pos, neg);
}

}  // namespace gds
