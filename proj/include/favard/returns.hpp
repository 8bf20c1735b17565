#pragma once

#include <string>
#include <vector>

#include "favard/cocycle.hpp"

namespace favard {

/// Near-return times of the base point, each with its affine map.
struct NearReturnSet {
  std::vector<AffineMapSample> returns;  ///< sorted by tau, strictly increasing
  double delta_cap = 0.0;
  double horizon = 0.0;
  double min_tau = 0.0;
  double scan_step = 0.0;
  std::size_t scanned = 0;               ///< grid points examined
  std::size_t composed = 0;              ///< entries added by composition
  double max_composition_defect = 0.0;

  bool empty() const { return returns.empty(); }
};

struct ReturnScan {
  double delta_cap = 0.05;
  double horizon = 100.0;
  double min_tau = 0.0;
  /// Continuous time: grid spacing, a positive multiple of the integrator
  /// step (0 selects the integrator step). Discrete time: ignored (1).
  double scan_step = 0.0;
};

/// All grid taus in [min_tau, horizon] with return quality <= delta_cap.
/// An empty set is a valid result, not an error.
NearReturnSet find_near_returns(const CocycleSystem& sys, const ReturnScan& scan);

/// Grid times tau_k = k * step of a return scan, in increasing order.
std::vector<double> return_scan_grid(const CocycleSystem& sys, const ReturnScan& scan);

struct ComposedReturn {
  AffineMapSample sample;  ///< affine_map_sample at tau_a + tau_b
  double defect = 0.0;     ///< distance to the algebraic composition a o b
};

/// The return at tau_a + tau_b, with the defect of the surrogate
/// composition Phi_a*Phi_b, Phi_a*b_b + b_a that ignores the base
/// displacement of sigma(tau_b, y0).
ComposedReturn compose_returns(const AffineMapSample& a, const AffineMapSample& b, const CocycleSystem& sys);

/// Adds pairwise sums of return times (repeated `depth` times) whose
/// return quality stays within delta_cap and which are not in the set yet.
NearReturnSet extend_with_compositions(const NearReturnSet& set, const CocycleSystem& sys, int depth,
                                       std::size_t max_new = 4096);

/// CSV: tau, delta, Phi entries row-major, then b entries.
std::string returns_csv(const NearReturnSet& set);

namespace reference {

/// Serial brute-force return scan.
NearReturnSet find_near_returns(const CocycleSystem& sys, const ReturnScan& scan);

}  // namespace reference

}  // namespace favard
