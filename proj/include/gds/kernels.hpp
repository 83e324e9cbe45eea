#pragma once

// Inner loops shared by the engines. Every kernel has a serial reference in
// kernels::serial and a data-parallel OpenMP variant in kernels::parallel.
// The parallel variants are written in "pull" form (each output written by
// exactly one thread, inputs read in a fixed order), so their results do not
// depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "gds/green.hpp"
#include "gds/lattice.hpp"

namespace gds::kernels {

/// Flat-index geometry of the sites a sweep visits.
struct SweepGeometry {
  int d = 2;
  std::array<std::ptrdiff_t, kMaxDim> stride{};
  std::vector<std::size_t> order;  ///< sites visited by a lexicographic sweep
  std::vector<std::size_t> red;    ///< sites of `order` with even coordinate sum
  std::vector<std::size_t> black;  ///< sites of `order` with odd coordinate sum
  /// Receivers of a half round in pull form: for receiver r, the senders
  /// from[begin[r] .. begin[r+1]) are its neighbours of the sending colour.
  struct Pull {
    std::vector<std::size_t> site;
    std::vector<std::size_t> begin{0};
    std::vector<std::size_t> from;
  };
  Pull from_red;    ///< black sites next to a red site of `order`
  Pull from_black;  ///< red sites next to a black site of `order`
};

/// Builds the geometry for the sites selected by `mask` (in window order).
/// Every selected site must have all 2d neighbours inside the window.
SweepGeometry make_sweep_geometry(const LatticeWindow& window, const std::vector<std::uint8_t>& mask);

/// Totals of one toppling pass.
struct SweepStats {
  double emitted = 0.0;
  long topplings = 0;
};

namespace serial {

/// out(x) = xi^d sum_{y in support} g(x-y) mu(y) for every site x of the window.
void potential_sum(const GreenKernel& kernel, const MassConfig& mu,
                   std::span<const std::size_t> support, LatticeField& out);

/// One lexicographic toppling sweep: every positive site of geometry.order is
/// emptied onto its neighbours in turn. Adds the emitted mass to `emitted`
/// and returns the pass totals.
SweepStats topple_sweep(const SweepGeometry& g, std::span<double> mass, std::span<double> emitted);

/// One projected Gauss-Seidel/SOR sweep for the obstacle problem
///   v(x) <- min(obstacle(x), v(x) + omega * (mean_{y~x} v(y) - v(x)))
/// over geometry.order. Returns the largest |change|.
double obstacle_sweep(const SweepGeometry& g, std::span<double> v, std::span<const double> obstacle,
                      double omega);

}  // namespace serial

namespace parallel {

void potential_sum(const GreenKernel& kernel, const MassConfig& mu,
                   std::span<const std::size_t> support, LatticeField& out);

/// One red-black round: all red sites topple (they do not interact), then all
/// black sites. `scratch` must have the window size; it is left zeroed.
/// Equivalent to toppling the red sites in any order followed by the black ones.
SweepStats topple_red_black(const SweepGeometry& g, std::span<double> mass, std::span<double> emitted,
                        std::span<double> scratch);

/// Red-black projected SOR sweep; returns the largest |change|.
double obstacle_red_black(const SweepGeometry& g, std::span<double> v,
                          std::span<const double> obstacle, double omega);

}  // namespace parallel

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int thread_count();
/// Caps the OpenMP thread count; no-op without OpenMP.
void set_thread_count(int n);

}  // namespace gds::kernels
