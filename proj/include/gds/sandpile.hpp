#pragma once

// Generalized divisible sandpile on a confining ball B(0,R) of xi*Z^d.
//
// A toppling at x empties the positive part of the mass at x equally onto the
// 2d neighbours; nonpositive sites are left alone. Only sites of the open ball
// B(0,R) are ever toppled, so mass that reaches the outer lattice boundary of
// the ball stays there.

#include <cstdint>
#include <functional>
#include <vector>

#include "gds/kernels.hpp"
#include "gds/lattice.hpp"

namespace gds {

/// Sites of the open ball B(0,R) (|x| < R strictly) and of its outer lattice
/// boundary, as masks over a window.
class ConfiningBall {
 public:
  ConfiningBall(const LatticeWindow& window, double R);

  const LatticeWindow& window() const noexcept { return window_; }
  double radius() const noexcept { return R_; }
  bool inside(std::size_t i) const noexcept { return inside_[i] != 0; }
  bool on_boundary(std::size_t i) const noexcept { return boundary_[i] != 0; }
  const SiteMask& inside_mask() const noexcept { return inside_; }
  const SiteMask& boundary_mask() const noexcept { return boundary_; }
  /// Sites of the ball in lexicographic order.
  const std::vector<std::size_t>& sites() const noexcept { return geometry_.order; }
  const kernels::SweepGeometry& geometry() const noexcept { return geometry_; }

 private:
  LatticeWindow window_;
  double R_;
  SiteMask inside_;
  SiteMask boundary_;
  kernels::SweepGeometry geometry_;
};

enum class Schedule {
  kSweep,     ///< lexicographic pass over the ball each round
  kQueue,     ///< FIFO of positive sites; neighbours pushed above threshold are enqueued
  kRandom,    ///< seeded random permutation of the ball each round
  kRedBlack,  ///< all even sites, then all odd sites (OpenMP kernel)
};

const char* to_string(Schedule s);
Schedule parse_schedule(const std::string& name);

/// Outcome of a single toppling.
struct Toppling {
  std::uint32_t site = 0;
  double emitted = 0.0;
};

/// Result of topple(): the emitted mass (0 when the site was not positive).
double topple(MassConfig& config, const Site& site, const ConfiningBall& ball);

/// Per-round diagnostics. Masses are raw lattice sums (no xi^d weight).
struct RoundStats {
  long round = 0;
  double residual = 0.0;  ///< largest positive mass left in the ball
  double m_plus = 0.0;
  double m_minus = 0.0;
  double q = 0.0;              ///< quadratic weight sum sigma(x)|x|^2
  double total_emitted = 0.0;  ///< cumulative, all rounds so far
};

struct GdsOptions {
  double R = 0.0;
  Schedule schedule = Schedule::kSweep;
  std::uint64_t seed = 0;
  /// Stop once every site of the ball holds less than this. <= 0 selects the
  /// default 1e-10 * max(1, M_plus).
  double stop_tol = 0.0;
  long max_rounds = 50'000'000;
  /// Record every toppling (site, emitted) in GdsResult::trace.
  bool audit = false;
  /// Admissibility (sum of negative parts >= sum of positive parts) is
  /// required by default. The bounded process itself is well defined without
  /// it; boundary-mass studies switch the check off.
  bool require_admissible = true;
  /// Check the structural guarantees after the run and per round; throws
  /// InvariantViolation on failure.
  bool check_invariants = true;
  /// Called after every round.
  std::function<void(const RoundStats&)> on_round;
};

struct GdsResult {
  explicit GdsResult(const LatticeWindow& w) : nu(w), u(w) {}

  MassConfig nu;      ///< final configuration
  LatticeField u;     ///< odometer, xi^2 times the total mass emitted per site
  long rounds = 0;
  long topplings = 0;  ///< topplings that emitted positive mass
  double stop_tol = 0.0;
  double stop_residual = 0.0;
  /// Kahan-summed total emitted mass (raw sum over topplings).
  double total_emitted = 0.0;
  std::vector<double> emitted_series;  ///< emitted mass per round
  std::vector<double> q_series;        ///< quadratic weight after each round
  std::vector<RoundStats> diagnostics;
  bool audited = false;
  std::vector<Toppling> trace;  ///< per-toppling record when audited
};

/// Total positive and negative parts (raw sums).
std::pair<double, double> mass_totals(const MassConfig& config);

/// sum_x config(x) |x|^2 with |x| in length units.
double quadratic_weight(const MassConfig& config);

/// Runs the generalized divisible sandpile to the stopping tolerance.
/// Throws InvalidArgument for inadmissible or badly supported sigma and
/// ConvergenceError when max_rounds is exceeded.
GdsResult run_gds(const MassConfig& sigma, const GdsOptions& options);

/// Sites that received or emitted mass: u > 0 or nu - sigma > tol.
SiteMask occupied_set(const GdsResult& result, const MassConfig& sigma, double tol);

}  // namespace gds
