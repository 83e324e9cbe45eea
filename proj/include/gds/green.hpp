#pragma once

// Lattice Green's functions and discrete Newtonian potentials.
//
// With the Laplacian normalized as (1/(2d xi^2)) sum_{y~x}(f(y)-f(x)), the
// kernel g_xi satisfies -Delta g_xi(., y) = delta_y / xi^d, so that the
// potential U^mu(x) = xi^d sum_y g_xi(x-y) mu(y) obeys -Delta U^mu = mu.
//
//   d = 2:  g_xi(z) = C(xi) - a(z/xi),      a = potential kernel of SRW on Z^2
//   d = 3:  g_xi(z) = xi^{-1} G(z/xi),      G = Green's function of SRW on Z^3

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gds/lattice.hpp"

namespace gds {

/// Potential kernel a(z) of simple random walk on Z^2, normalized by a(0) = 0
/// and (1/4) sum_{w~z} a(w) - a(z) = delta_0(z). Evaluated from the
/// continuous-time Bessel representation; cached.
double potential_kernel_2d(int x, int y);

/// Expected number of visits to z of simple random walk on Z^3 started at 0.
/// Same evaluation scheme as potential_kernel_2d; cached.
double greens_function_3d(int x, int y, int z);

/// gamma_1(0, z) for d >= 3. Only d = 3 is supported.
double greens_function_transient(const Site& z, int d);

/// The additive constant used for d = 2 as published, (2/pi) log xi.
double published_constant_2d(double xi);
/// The constant that makes g_xi(z) -> -(2/pi) log|z| as xi -> 0 for fixed z,
/// i.e. (2/pi) (gamma_E + (3/2) log 2 - log xi).
double continuum_constant_2d(double xi);

/// Translation-invariant table of g_xi(z) for |z_i| <= radius (in sites).
class GreenKernel {
 public:
  GreenKernel(int d, double xi, int radius, double constant, std::vector<double> unit_values);

  int dim() const noexcept { return d_; }
  double xi() const noexcept { return xi_; }
  int radius() const noexcept { return radius_; }
  /// Additive constant C(xi) for d = 2; zero for d = 3.
  double constant() const noexcept { return constant_; }

  /// g_xi at an integer offset (in sites). Throws when |z_i| > radius.
  double operator()(const Site& offset) const;
  /// Unit-lattice value a(z) (d = 2) or G(z) (d = 3).
  double unit(const Site& offset) const;

  /// Same table with a different d = 2 additive constant.
  GreenKernel with_constant(double constant) const;

  /// Largest violation, over offsets with |z_i| < radius, of the defining
  /// relation of the unit table: mean_{w~z} a(w) - a(z) = delta_0(z) for d = 2
  /// and G(z) - mean_{w~z} G(w) = delta_0(z) for d = 3.
  double harmonicity_residual() const;

  /// g_xi over the nonnegative orthant, row-major with last axis fastest,
  /// extent radius+1 per axis. Used by the potential kernels.
  std::span<const double> orthant() const noexcept { return g_; }
  std::ptrdiff_t orthant_stride(int axis) const noexcept { return stride_[axis]; }

 private:
  std::size_t slot(const Site& offset) const;

  int d_;
  double xi_;
  int radius_;
  double constant_;
  std::vector<double> unit_;  // unit-lattice values on the orthant
  std::vector<double> g_;     // scaled values g_xi on the orthant
  std::array<std::ptrdiff_t, kMaxDim> stride_{};
};

/// Builds the kernel table for offsets up to radius_in_sites. For d = 2 the
/// constant is published_constant_2d(xi).
GreenKernel kernel_table(int d, double xi, int radius_in_sites);

/// Kernel large enough for any pair of sites of `window` (radius = diameter).
GreenKernel kernel_for_window(const LatticeWindow& window);

enum class Execution {
  kSerial,    ///< reference loops
  kParallel,  ///< OpenMP kernels (falls back to serial without OpenMP)
};

/// U(x) = xi^d sum_y g(x-y) mu(y) at every site of mu's window, by direct
/// summation over the support of mu. Summation order per target is fixed,
/// so both execution modes are reproducible run to run.
LatticeField potential(const MassConfig& mu, const GreenKernel& kernel,
                       Execution exec = Execution::kSerial);

/// Potential evaluated at a single site.
double potential_at(const MassConfig& mu, const GreenKernel& kernel, const Site& x);

/// Grid CSV with a "# kernel d=.. xi=.." header over the orthant [0,radius]^d.
void write_kernel_csv(const std::string& path, const GreenKernel& kernel);
GreenKernel read_kernel_csv(const std::string& path);

}  // namespace gds
