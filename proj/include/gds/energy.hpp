#pragma once

// Lattice energies E[eta] = xi^d sum U^eta eta and the audit of a toppling run
// against the closed-form energy bookkeeping.

#include <cstdint>
#include <vector>

#include "gds/green.hpp"
#include "gds/sandpile.hpp"

namespace gds {

/// E[eta] = xi^d sum_x U^eta(x) eta(x).
double energy(const MassConfig& eta, const GreenKernel& kernel, Execution exec = Execution::kSerial);

/// E[eta, kappa] = xi^d sum_x U^eta(x) kappa(x).
double mutual_energy(const MassConfig& eta, const MassConfig& kappa, const GreenKernel& kernel,
                     Execution exec = Execution::kSerial);

struct AuditOptions {
  /// Direct energy evaluation every this many topplings; 0 picks
  /// max(100, n/200).
  long checkpoint_every = 0;
  double checkpoint_rtol = 1e-8;
  double drop_rtol = 1e-10;
  double series_rtol = 1e-7;
  /// Relative error assumed for each kernel table entry when deciding
  /// whether a single drop is numerically resolvable at drop_rtol.
  double kernel_rel_err = 1e-15;
};

struct EnergyAudit {
  double e0 = 0.0;
  long n_topplings = 0;

  // Per-toppling drops. A drop is "resolvable" when the rounding bound of its
  // direct evaluation is below drop_rtol / 10 of its size.
  long drops_checked = 0;
  long drops_unresolved = 0;
  double max_drop_err = 0.0;      ///< max relative error over resolvable drops
  double max_drop_positive = 0.0; ///< largest direct drop > 0 among resolvable ones
  double predicted_drop_total = 0.0;

  // Checkpoints E_k = E_0 - xi^{d+2} sum emitted^2.
  long checkpoints = 0;
  double max_checkpoint_err = 0.0;
  std::vector<long> checkpoint_steps;
  std::vector<double> energy_series;  ///< direct E at each checkpoint

  // E[sigma - nu] against the closed-form series.
  double e_sigma_minus_nu_direct = 0.0;
  double e_sigma_minus_nu_series = 0.0;
  double series_err = 0.0;

  bool passed = false;
};

/// Replays result.trace on sigma and checks the three energy identities.
/// Throws InvalidArgument when the run was not audited or the replay does
/// not reproduce result.nu.
EnergyAudit audit_run(const GdsResult& result, const MassConfig& sigma, const GreenKernel& kernel,
                      const AuditOptions& options = {});

struct MinimizerOptions {
  double R = 0.0;
  int trials = 20;
  /// Perturbation size relative to max|sigma|.
  double perturbation_scale = 1e-3;
  std::uint64_t seed = 1;
};

struct MinimizerReport {
  int trials_run = 0;
  int trials_skipped = 0;
  double e_sigma_minus_nu = 0.0;
  /// max over trials of E[sigma-nu] - E[sigma-nu~]; <= 0 for a minimizer.
  double max_violation = 0.0;
  /// min over trials of E[sigma-nu, nu-nu~]; >= 0 for a minimizer.
  double min_first_order = 0.0;
  /// xi^d * max u * sum|nu - nu~| over trials, the size of the first-order term.
  double first_order_scale = 0.0;
};

/// Samples feasible competitors nu~ (nu~ <= 0 on the ball, same total mass,
/// support in the ball and its outer boundary) near nu and compares energies.
MinimizerReport verify_minimizer(const MassConfig& sigma, const MassConfig& nu, const GreenKernel& kernel,
                                 const MinimizerOptions& options);

}  // namespace gds
