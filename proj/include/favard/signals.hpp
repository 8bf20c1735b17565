#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "favard/norms.hpp"
#include "favard/quasi_periodic.hpp"

namespace favard {

/// Uniformly sampled path: values[i] is the state at t0 + i*dt.
struct TrajectorySample {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<Vector> values;
  StateNorm norm;

  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double end_time() const { return time(values.empty() ? 0 : values.size() - 1); }

  /// Throws ValidationError on empty samples, dt <= 0, or ragged values.
  void validate() const;
};

/// Forcing f(sigma(t, theta0)) on t0, t0+dt, ... (count samples).
TrajectorySample sample_forcing(const QuasiPeriodicSpec& spec, const TorusPoint& theta0, double t0,
                                double dt, std::size_t count);

/// Truncated Bebutov distance: max over L in l_grid of
/// min{ max_{|t|<=L} |a(t)-b(t)|, 1/L }.
double bebutov_distance(const TrajectorySample& a, const TrajectorySample& b,
                        std::span<const double> l_grid);

struct AlmostPeriodReport {
  double epsilon = 0.0;
  double window_halfwidth = 0.0;
  std::vector<double> periods;  ///< sorted
  double max_gap = std::numeric_limits<double>::infinity();
  double scan_min = 0.0;
  double scan_max = 0.0;
  double scan_step = 0.0;
};

struct AlmostPeriodScan {
  double epsilon = 0.0;
  double window_halfwidth = 0.0;
  double scan_min = 0.0;
  double scan_max = 0.0;
  double scan_step = 0.0;  ///< positive integer multiple of the sample dt
};

/// tau is listed iff max over grid t in [-L, L] of |x(t+tau) - x(t)| < epsilon.
/// Parallel over tau candidates.
AlmostPeriodReport scan_almost_periods(const TrajectorySample& traj, const AlmostPeriodScan& scan);

/// max_gap of the report; +infinity when no period was found.
double relative_density_gap(const AlmostPeriodReport& report);

/// Largest gap between consecutive periods, including the gaps to the
/// ends of the scan range.
double max_gap(std::span<const double> periods, double scan_min, double scan_max);

/// CSV with columns tau, window_L, epsilon.
std::string almost_periods_csv(const AlmostPeriodReport& report);

namespace reference {

/// Serial scan without early exit.
AlmostPeriodReport scan_almost_periods(const TrajectorySample& traj, const AlmostPeriodScan& scan);

}  // namespace reference

}  // namespace favard
