#include "favard/signals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "favard/errors.hpp"
#include "favard/io.hpp"

namespace favard {

namespace {

struct ScanLayout {
  std::ptrdiff_t stride = 1;     // samples per scan step
  std::ptrdiff_t window_lo = 0;  // first sample index with t >= -L
  std::ptrdiff_t window_hi = 0;  // last sample index with t <= L
  long k_lo = 0;                 // tau = k * scan_step
  long k_hi = -1;
};

ScanLayout plan_scan(const TrajectorySample& traj, const AlmostPeriodScan& scan) {
  traj.validate();
  if (!(scan.epsilon > 0.0)) throw ValidationError("epsilon", "must be positive");
  if (!(scan.window_halfwidth > 0.0)) throw ValidationError("window_halfwidth", "must be positive");
  if (!(scan.scan_step > 0.0)) throw ValidationError("scan_step", "must be positive");
  if (scan.scan_max < scan.scan_min) throw ValidationError("scan_range", "scan_max < scan_min");

  ScanLayout plan;
  const double ratio = scan.scan_step / traj.dt;
  plan.stride = static_cast<std::ptrdiff_t>(std::llround(ratio));
  if (plan.stride < 1 || std::abs(ratio - static_cast<double>(plan.stride)) > 1e-9 * ratio) {
    throw ValidationError("scan_step", "must be a positive integer multiple of the sample step");
  }
  const double L = scan.window_halfwidth;
  plan.window_lo = static_cast<std::ptrdiff_t>(std::ceil((-L - traj.t0) / traj.dt - 1e-9));
  plan.window_hi = static_cast<std::ptrdiff_t>(std::floor((L - traj.t0) / traj.dt + 1e-9));
  plan.k_lo = static_cast<long>(std::ceil(scan.scan_min / scan.scan_step - 1e-9));
  plan.k_hi = static_cast<long>(std::floor(scan.scan_max / scan.scan_step + 1e-9));

  const auto n = static_cast<std::ptrdiff_t>(traj.values.size());
  const std::ptrdiff_t lo_shift = std::min<std::ptrdiff_t>(0, plan.k_lo * plan.stride);
  const std::ptrdiff_t hi_shift = std::max<std::ptrdiff_t>(0, plan.k_hi * plan.stride);
  if (plan.window_lo + lo_shift < 0 || plan.window_hi + hi_shift >= n) {
    throw CoverageError("trajectory on [" + format_double(traj.t0) + ", " +
                        format_double(traj.end_time()) + "] does not cover [-L, L + tau_max] = [" +
                        format_double(-L + std::min(0.0, scan.scan_min)) + ", " +
                        format_double(L + std::max(0.0, scan.scan_max)) + "]");
  }
  return plan;
}

// sup over the window of |x(t + tau) - x(t)|, stopping early once the
// value reaches `stop_at`.
double window_deviation(const TrajectorySample& traj, const ScanLayout& plan, std::ptrdiff_t shift,
                        double stop_at) {
  double worst = 0.0;
  for (std::ptrdiff_t i = plan.window_lo; i <= plan.window_hi; ++i) {
    const double d = traj.norm.distance(traj.values[static_cast<std::size_t>(i + shift)],
                                        traj.values[static_cast<std::size_t>(i)]);
    if (d > worst) {
      worst = d;
      if (worst >= stop_at) break;
    }
  }
  return worst;
}

AlmostPeriodReport make_report(const AlmostPeriodScan& scan, std::vector<double> periods) {
  AlmostPeriodReport report;
  report.epsilon = scan.epsilon;
  report.window_halfwidth = scan.window_halfwidth;
  report.scan_min = scan.scan_min;
  report.scan_max = scan.scan_max;
  report.scan_step = scan.scan_step;
  report.periods = std::move(periods);
  std::sort(report.periods.begin(), report.periods.end());
  report.max_gap = max_gap(report.periods, scan.scan_min, scan.scan_max);
  return report;
}

}  // namespace

void TrajectorySample::validate() const {
  if (values.empty()) throw ValidationError("values", "trajectory sample is empty");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt", "must be positive and finite");
  const auto dim = values.front().size();
  for (const auto& v : values) {
    if (v.size() != dim) throw ValidationError("values", "all states must have equal dimension");
  }
  if (norm.kind == NormKind::delay_sum && (norm.block <= 0 || dim % norm.block != 0 || dim == norm.block)) {
    throw ValidationError("norm_kind", "delay_sum requires stacked delay states");
  }
}

TrajectorySample sample_forcing(const QuasiPeriodicSpec& spec, const TorusPoint& theta0, double t0,
                                double dt, std::size_t count) {
  TrajectorySample traj;
  traj.t0 = t0;
  traj.dt = dt;
  traj.values.resize(count);
  std::vector<double> phase;
  Matrix A;
#pragma omp parallel for schedule(static) private(phase, A)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    Vector f;
    eval_base_into(spec, theta0, t0 + static_cast<double>(i) * dt, phase, A, f);
    traj.values[static_cast<std::size_t>(i)] = std::move(f);
  }
  return traj;
}

double bebutov_distance(const TrajectorySample& a, const TrajectorySample& b,
                        std::span<const double> l_grid) {
  a.validate();
  b.validate();
  const double tol = 1e-12 * std::max(1.0, std::abs(a.dt));
  if (std::abs(a.t0 - b.t0) > tol * std::max(1.0, std::abs(a.t0)) || std::abs(a.dt - b.dt) > tol ||
      a.values.size() != b.values.size() || a.values.front().size() != b.values.front().size()) {
    throw DomainMismatchError("bebutov_distance: samples live on different grids");
  }
  const double half_width = std::min(-a.t0, a.end_time());
  for (double L : l_grid) {
    if (!(L > 0.0) || L > half_width * (1.0 + 1e-12)) {
      throw ValidationError("L_grid", "entries must lie in (0, T] for the sampled window [-T, T]");
    }
  }
  double result = 0.0;
  for (double L : l_grid) {
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil((-L - a.t0) / a.dt - 1e-9));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor((L - a.t0) / a.dt + 1e-9));
    double sup = 0.0;
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(lo, 0);
         i <= std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(a.values.size()) - 1); ++i) {
      sup = std::max(sup, a.norm.distance(a.values[static_cast<std::size_t>(i)],
                                          b.values[static_cast<std::size_t>(i)]));
    }
    result = std::max(result, std::min(sup, 1.0 / L));
  }
  return result;
}

AlmostPeriodReport scan_almost_periods(const TrajectorySample& traj, const AlmostPeriodScan& scan) {
  const ScanLayout plan = plan_scan(traj, scan);
  const long count = plan.k_hi >= plan.k_lo ? plan.k_hi - plan.k_lo + 1 : 0;
  std::vector<char> listed(static_cast<std::size_t>(count), 0);
#pragma omp parallel for schedule(dynamic, 64)
  for (long idx = 0; idx < count; ++idx) {
    const std::ptrdiff_t shift = (plan.k_lo + idx) * plan.stride;
    listed[static_cast<std::size_t>(idx)] = window_deviation(traj, plan, shift, scan.epsilon) < scan.epsilon;
  }
  std::vector<double> periods;
  for (long idx = 0; idx < count; ++idx) {
    if (listed[static_cast<std::size_t>(idx)]) {
      periods.push_back(static_cast<double>(plan.k_lo + idx) * scan.scan_step);
    }
  }
  return make_report(scan, std::move(periods));
}

namespace reference {

AlmostPeriodReport scan_almost_periods(const TrajectorySample& traj, const AlmostPeriodScan& scan) {
  const ScanLayout plan = plan_scan(traj, scan);
  std::vector<double> periods;
  for (long k = plan.k_lo; k <= plan.k_hi; ++k) {
    const double dev =
        window_deviation(traj, plan, k * plan.stride, std::numeric_limits<double>::infinity());
    if (dev < scan.epsilon) periods.push_back(static_cast<double>(k) * scan.scan_step);
  }
  return make_report(scan, std::move(periods));
}

}  // namespace reference

double max_gap(std::span<const double> periods, double scan_min, double scan_max) {
  if (periods.empty()) return std::numeric_limits<double>::infinity();
  double gap = periods.front() - scan_min;
  for (std::size_t i = 1; i < periods.size(); ++i) gap = std::max(gap, periods[i] - periods[i - 1]);
  return std::max(gap, scan_max - periods.back());
}

double relative_density_gap(const AlmostPeriodReport& report) {
  if (report.periods.empty()) return std::numeric_limits<double>::infinity();
  return report.max_gap;
}

std::string almost_periods_csv(const AlmostPeriodReport& report) {
  std::ostringstream out;
  out << "tau,window_L,epsilon\n";
  for (double tau : report.periods) {
    out << format_double(tau) << ',' << format_double(report.window_halfwidth) << ','
        << format_double(report.epsilon) << '\n';
  }
  return out.str();
}

}  // namespace favard
