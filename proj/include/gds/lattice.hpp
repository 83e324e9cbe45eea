#pragma once

// Finite windows of the scaled lattice xi*Z^d (d = 2 or 3), lattice functions
// on them, and the discretization operators that carry continuous sources
// onto the lattice.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "gds/errors.hpp"

namespace gds {

inline constexpr int kMaxDim = 3;

/// Integer lattice coordinates. Axes >= d are ignored and kept at 0.
using Site = std::array<int, kMaxDim>;
/// A point of R^d in length units. Axes >= d are ignored and kept at 0.
using Point = std::array<double, kMaxDim>;

/// Box of sites xi*k with lo <= k <= hi componentwise.
///
/// Values on a window are stored dense and row-major, last axis fastest.
class LatticeWindow {
 public:
  LatticeWindow(int d, double xi, Site lo, Site hi);

  /// Window [-half_width, half_width]^d.
  static LatticeWindow centered(int d, double xi, int half_width);

  /// Smallest centred window holding the open ball B(0,R) and its outer
  /// lattice boundary, i.e. half width ceil(R/xi).
  static LatticeWindow for_ball(int d, double xi, double R);

  int dim() const noexcept { return d_; }
  double xi() const noexcept { return xi_; }
  const Site& lo() const noexcept { return lo_; }
  const Site& hi() const noexcept { return hi_; }
  int extent(int axis) const noexcept { return hi_[axis] - lo_[axis] + 1; }
  std::size_t size() const noexcept { return size_; }
  std::ptrdiff_t stride(int axis) const noexcept { return stride_[axis]; }

  /// xi^d, the volume of one lattice cell.
  double cell_volume() const noexcept { return cell_volume_; }

  bool contains(const Site& k) const noexcept;
  std::size_t index(const Site& k) const noexcept;
  Site site(std::size_t index) const noexcept;
  Point position(const Site& k) const noexcept;
  /// |xi*k|^2 in length units.
  double norm2(const Site& k) const noexcept;
  /// Largest |k_i| over the window, i.e. the diameter in sites is 2*radius.
  int radius_in_sites() const noexcept;

  friend bool operator==(const LatticeWindow& a, const LatticeWindow& b) noexcept {
    return a.d_ == b.d_ && a.xi_ == b.xi_ && a.lo_ == b.lo_ && a.hi_ == b.hi_;
  }

 private:
  int d_;
  double xi_;
  Site lo_;
  Site hi_;
  std::array<std::ptrdiff_t, kMaxDim> stride_{};
  std::size_t size_ = 0;
  double cell_volume_ = 1.0;
};

/// Dense real-valued lattice function on a window. The tag keeps mass
/// configurations and plain fields (odometers, potentials) apart.
template <class Tag>
class Grid {
 public:
  explicit Grid(LatticeWindow window) : window_(window), values_(window.size(), 0.0) {}
  Grid(LatticeWindow window, std::vector<double> values)
      : window_(window), values_(std::move(values)) {
    if (values_.size() != window_.size()) {
      throw InvalidArgument("grid value count does not match window size");
    }
  }

  const LatticeWindow& window() const noexcept { return window_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](const Site& k) noexcept { return values_[window_.index(k)]; }
  double operator[](const Site& k) const noexcept { return values_[window_.index(k)]; }

  /// Value at k, or 0 when k lies outside the window.
  double value_or_zero(const Site& k) const noexcept {
    return window_.contains(k) ? values_[window_.index(k)] : 0.0;
  }

  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.window_ == b.window_ && a.values_ == b.values_;
  }

 private:
  LatticeWindow window_;
  std::vector<double> values_;
};

struct MassTag {};
struct FieldTag {};

/// Signed lattice mass density (mass per site, the lattice function sigma(x)).
using MassConfig = Grid<MassTag>;
/// Real lattice function: odometers (mass * length^2), potentials, ...
using LatticeField = Grid<FieldTag>;

inline double positive_part(double v) noexcept { return v > 0.0 ? v : 0.0; }
inline double negative_part(double v) noexcept { return v < 0.0 ? -v : 0.0; }

/// Raw sum of values (plain lattice sum, no xi^d weight).
double total(const MassConfig& m);
/// xi^d * sum of values, i.e. the total mass of the associated measure.
double total_mass(const MassConfig& m);
double max_abs(std::span<const double> v);

// ---------------------------------------------------------------------------
// Neighbours and the discrete Laplacian

/// The 2d lattice neighbours of k, in the order -e0, +e0, -e1, +e1, ...
/// Sites outside the window are returned as well.
std::vector<Site> neighbors(const Site& k, const LatticeWindow& window);

enum class Extension {
  kNone,  ///< out-of-window neighbours are an error ("missing neighbor")
  kZero,  ///< out-of-window neighbours read as 0
};

/// (1/(2d xi^2)) * sum_{y~k} (f(y) - f(k)).
template <class Tag>
double discrete_laplacian(const Grid<Tag>& f, const Site& k, Extension ext = Extension::kNone);

/// Laplacian at every site of the window.
template <class Tag>
LatticeField laplacian(const Grid<Tag>& f, Extension ext = Extension::kZero);

// ---------------------------------------------------------------------------
// Continuous sets and the inner/outer epsilon-neighbourhood check

struct Ball {
  Point center{};
  double radius = 0.0;
};
struct Annulus {
  Point center{};
  double inner = 0.0;
  double outer = 0.0;
};
struct Box {
  Point lo{};
  Point hi{};
};
struct BallUnion {
  std::vector<Ball> balls;
};

/// Radial or rectangular region of R^d described by a signed distance.
class ContinuousSet {
 public:
  using Shape = std::variant<Ball, Annulus, Box, BallUnion>;

  ContinuousSet(int d, Shape shape) : d_(d), shape_(std::move(shape)) {}

  int dim() const noexcept { return d_; }
  const Shape& shape() const noexcept { return shape_; }

  /// Negative inside, positive outside. Exact Euclidean distance to the
  /// boundary for balls, annuli and boxes; the min over members for unions.
  double signed_distance(const Point& x) const;
  bool contains(const Point& x) const { return signed_distance(x) < 0.0; }

  /// Axis-aligned bounding box (lo, hi).
  std::pair<Point, Point> bounds() const;
  /// Lebesgue measure of the set. Unions of overlapping balls are not supported.
  double volume() const;

 private:
  int d_;
  Shape shape_;
};

/// Sites belonging to a set A, stored as a mask over a window.
using SiteMask = std::vector<std::uint8_t>;

/// True iff D_eps (inner neighbourhood) intersected with the window's sites
/// lies in A and every site of A lies in D^eps (outer neighbourhood).
bool set_sandwich_check(const SiteMask& a, const LatticeWindow& window, const ContinuousSet& d,
                        double eps);

/// Infimum of the eps for which set_sandwich_check holds: the largest of
/// sd(x) over sites of A and -sd(x) over sites outside A (clamped at 0).
double minimal_sandwich_eps(const SiteMask& a, const LatticeWindow& window, const ContinuousSet& d);

// ---------------------------------------------------------------------------
// Sampling operators

/// The site k with xi*k in x + (-xi/2, xi/2]^d, i.e. k_i = floor(x_i/xi + 1/2).
/// Throws InvalidArgument when the site falls outside the window.
Site nearest_site(const Point& x, const LatticeWindow& window);
/// Same rounding without the window check.
Site nearest_site(const Point& x, int d, double xi);

/// Point mass m at p.
struct AtomTerm {
  Point at{};
  double mass = 0.0;
};

/// Bounded, a.e.-continuous density supported in `support`.
struct DensityTerm {
  ContinuousSet support;
  std::function<double(const Point&)> value;
  /// Exact total mass when known (used by admissibility checks).
  std::optional<double> analytic_mass;
};

/// Hypersurface measure on the sphere |x - center| = radius times t.
/// Total mass t * |S^{d-1}| * radius^{d-1}.
struct SphereLayerTerm {
  Point center{};
  double radius = 1.0;
  double t = 0.0;
};

struct SourceTerm {
  std::vector<AtomTerm> atoms;
  std::vector<DensityTerm> densities;
  std::vector<SphereLayerTerm> layers;
};

struct DiscretizeOptions {
  int quadrature_points = 4;            ///< q: midpoint samples per axis per cell
  std::uint64_t seed = 0x5eed;          ///< seed for sphere-layer sampling
  std::size_t min_sphere_samples = 200000;
  std::size_t sphere_samples_per_cell = 400;
};

/// Carry a continuous source onto the lattice: cell averages for densities,
/// m/xi^d for atoms, Monte Carlo surface fractions for sphere layers.
/// Throws InvalidArgument("window too small") if any part of the support
/// falls outside the window's cells.
MassConfig discretize(const SourceTerm& source, const LatticeWindow& window,
                      const DiscretizeOptions& options = {});

/// Exact total mass of a source term, split into (positive, negative) parts by
/// the sign of each term. Empty when some density has no analytic_mass.
std::optional<std::pair<double, double>> analytic_masses(const SourceTerm& source, int d);

/// Volume of the unit ball and area of the unit sphere in R^d.
double unit_ball_volume(int d);
double unit_sphere_area(int d);

}  // namespace gds
