#pragma once

#include <span>
#include <string>
#include <vector>

#include "favard/cocycle.hpp"
#include "favard/minmax.hpp"

namespace favard {

struct ComparabilityReport {
  std::vector<double> epsilons;
  std::vector<double> deltas;       ///< delta(eps), 0 when no grid level works
  std::vector<std::size_t> counts;  ///< witnessing taus at delta(eps)
  std::vector<double> delta_grid;   ///< decreasing
  double horizon = 0.0;
  double min_tau = 0.0;
  double min_return = 0.0;
  double scan_step = 0.0;
  std::size_t base_return_count = 0;  ///< scanned taus with quality < max(delta_grid)
  NormKind solution_norm_kind = NormKind::euclidean;
};

struct ModulusOptions {
  /// Solution and base are re-based to time min_tau before the scan, so a
  /// transient on [0, min_tau] does not enter the test.
  double min_tau = 0.0;
  /// Return times below this are the trivial neighbourhood of 0 and are not
  /// scanned. Negative selects pi / max|omega| (continuous) or 1 (discrete).
  double min_return = -1.0;
  /// Spacing of scanned taus; 0 selects the integrator step.
  double scan_step = 0.0;
  double blowup_factor = 1e8;
};

/// pi * 2^-j for j = 0..20.
std::vector<double> default_comparability_grid();

/// For each eps, the largest delta in the grid such that every scanned tau
/// in [min_return, horizon] with base quality < delta has
/// |psi(tau, x, y) - x| < eps, where x = psi(min_tau, u, y0) and
/// y = sigma(min_tau, y0). Levels without any witnessing tau do not count.
ComparabilityReport estimate_modulus(const CocycleSystem& sys, const Vector& u, std::span<const double> epsilons,
                                     double horizon, std::span<const double> delta_grid,
                                     const ModulusOptions& options = {});

struct InclusionCheck {
  bool holds = true;
  double worst_tau = 0.0;
  double worst_deviation = 0.0;
};

/// Whether |psi(tau, u, y0) - u| < eps along the given increasing taus.
InclusionCheck check_sequence_inclusion(const CocycleSystem& sys, const Vector& u, std::span<const double> taus,
                                        double epsilon);

/// estimate_modulus on u_bar. Throws PreconditionError unless the result
/// is certified.
ComparabilityReport comparability_from_fixed_point(const FavardResult& result, const CocycleSystem& sys,
                                                   std::span<const double> epsilons, double horizon,
                                                   std::span<const double> delta_grid,
                                                   const ModulusOptions& options = {});

/// Columns epsilon, delta, horizon, count.
std::string comparability_csv(const ComparabilityReport& report);

namespace reference {

/// Serial, one level at a time, straight from the definition.
ComparabilityReport estimate_modulus(const CocycleSystem& sys, const Vector& u, std::span<const double> epsilons,
                                     double horizon, std::span<const double> delta_grid,
                                     const ModulusOptions& options = {});

}  // namespace reference

}  // namespace favard
