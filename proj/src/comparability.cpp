#include "favard/comparability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "favard/errors.hpp"
#include "favard/io.hpp"

namespace favard {

namespace {

struct ScanSetup {
  CocycleSystem base;
  Vector x;
  long stride = 1;
  long count = 0;
  double spacing = 0.0;
  double min_return = 0.0;
  std::vector<double> levels;  // decreasing, unique
};

ScanSetup prepare(const CocycleSystem& sys, const Vector& u, std::span<const double> epsilons, double horizon,
                  std::span<const double> delta_grid, const ModulusOptions& opt) {
  if (u.size() != sys.state_dim()) throw ValidationError("u", "state has wrong dimension");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw ValidationError("epsilons", "must be positive");
  }
  if (delta_grid.empty()) throw ValidationError("delta_grid", "must be nonempty");
  for (double d : delta_grid) {
    if (!(d > 0.0)) throw ValidationError("delta_grid", "must be positive");
  }
  if (!(opt.min_tau >= 0.0)) throw ValidationError("min_tau", "must be nonnegative");

  double min_return = opt.min_return;
  if (min_return < 0.0) {
    double wmax = 0.0;
    for (double w : sys.spec().frequencies) wmax = std::max(wmax, std::abs(w));
    min_return = sys.is_discrete() ? 1.0 : std::numbers::pi / wmax;
  }
  if (!(horizon > min_return)) throw ValidationError("horizon", "must exceed the minimal return time");

  const double h = sys.is_discrete() ? 1.0 : sys.step();
  long stride = 1;
  if (!sys.is_discrete() && opt.scan_step != 0.0) {
    const double ratio = opt.scan_step / h;
    stride = std::lround(ratio);
    if (!(opt.scan_step > 0.0) || stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
      throw ValidationError("scan_step", "must be a positive integer multiple of the integrator step");
    }
  }
  if (sys.is_discrete() && opt.min_tau != std::floor(opt.min_tau)) {
    throw ValidationError("min_tau", "must be an integer in discrete time");
  }

  ScanSetup s{sys.shifted(opt.min_tau), evaluate_affine(sys, u, opt.min_tau), 1, 0, 0.0, 0.0, {}};
  s.stride = stride;
  s.spacing = static_cast<double>(stride) * h;
  s.count = static_cast<long>(std::floor(horizon / s.spacing + 1e-9)) + 1;
  s.min_return = min_return;
  s.levels.assign(delta_grid.begin(), delta_grid.end());
  std::sort(s.levels.begin(), s.levels.end(), std::greater<>());
  s.levels.erase(std::unique(s.levels.begin(), s.levels.end()), s.levels.end());
  return s;
}

// Quality and deviation of every scanned tau >= min_return.
void scan(const ScanSetup& s, double blowup_factor, std::vector<double>& quality, std::vector<double>& deviation) {
  const StateNorm norm = s.base.norm();
  const double threshold = blowup_factor * (1.0 + norm(s.x));
  visit_trajectory(s.base, s.x, s.stride, s.count, [&](long k, const Vector& state) {
    const double n = norm(state);
    const double tau = static_cast<double>(k) * s.spacing;
    if (!(n <= threshold)) {
      throw BlowUpError("trajectory exceeds " + format_double(threshold) + " at tau=" + format_double(tau));
    }
    if (tau < s.min_return) return;
    quality.push_back(s.base.return_quality(tau));
    deviation.push_back(norm.distance(state, s.x));
  });
}

ComparabilityReport make_report(const ScanSetup& s, std::span<const double> epsilons, double horizon,
                                const ModulusOptions& opt, const std::vector<std::size_t>& witnesses,
                                const std::vector<double>& worst, std::size_t base_returns) {
  ComparabilityReport report;
  report.epsilons.assign(epsilons.begin(), epsilons.end());
  report.delta_grid = s.levels;
  report.horizon = horizon;
  report.min_tau = opt.min_tau;
  report.min_return = s.min_return;
  report.scan_step = s.spacing;
  report.base_return_count = base_returns;
  report.solution_norm_kind = s.base.norm().kind;
  for (double eps : epsilons) {
    double delta = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < s.levels.size(); ++j) {
      if (witnesses[j] > 0 && worst[j] < eps) {
        delta = s.levels[j];
        count = witnesses[j];
        break;
      }
    }
    report.deltas.push_back(delta);
    report.counts.push_back(count);
  }
  return report;
}

}  // namespace

std::vector<double> default_comparability_grid() {
  std::vector<double> grid;
  for (int j = 0; j <= 20; ++j) grid.push_back(std::ldexp(std::numbers::pi, -j));
  return grid;
}

ComparabilityReport estimate_modulus(const CocycleSystem& sys, const Vector& u, std::span<const double> epsilons,
                                     double horizon, std::span<const double> delta_grid,
                                     const ModulusOptions& options) {
  const ScanSetup s = prepare(sys, u, epsilons, horizon, delta_grid, options);
  std::vector<double> quality;
  std::vector<double> deviation;
  scan(s, options.blowup_factor, quality, deviation);

  const auto L = static_cast<std::ptrdiff_t>(s.levels.size());
  std::vector<std::size_t> witnesses(s.levels.size(), 0);
  std::vector<double> worst(s.levels.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < L; ++j) {
    const double level = s.levels[static_cast<std::size_t>(j)];
    std::size_t n = 0;
    double w = 0.0;
    for (std::size_t i = 0; i < quality.size(); ++i) {
      if (quality[i] < level) {
        ++n;
        w = std::max(w, deviation[i]);
      }
    }
    witnesses[static_cast<std::size_t>(j)] = n;
    worst[static_cast<std::size_t>(j)] = w;
  }
  return make_report(s, epsilons, horizon, options, witnesses, worst, witnesses.empty() ? 0 : witnesses.front());
}

namespace reference {

ComparabilityReport estimate_modulus(const CocycleSystem& sys, const Vector& u, std::span<const double> epsilons,
                                     double horizon, std::span<const double> delta_grid,
                                     const ModulusOptions& options) {
  const ScanSetup s = prepare(sys, u, epsilons, horizon, delta_grid, options);
  std::vector<double> quality;
  std::vector<double> deviation;
  scan(s, options.blowup_factor, quality, deviation);

  ComparabilityReport report;
  report.epsilons.assign(epsilons.begin(), epsilons.end());
  report.delta_grid = s.levels;
  report.horizon = horizon;
  report.min_tau = options.min_tau;
  report.min_return = s.min_return;
  report.scan_step = s.spacing;
  report.solution_norm_kind = s.base.norm().kind;
  for (double q : quality) report.base_return_count += q < s.levels.front();
  for (double eps : epsilons) {
    double delta = 0.0;
    std::size_t count = 0;
    for (double level : s.levels) {
      bool witnessed = false;
      bool holds = true;
      std::size_t n = 0;
      for (std::size_t i = 0; i < quality.size(); ++i) {
        if (quality[i] >= level) continue;
        witnessed = true;
        ++n;
        holds = holds && deviation[i] < eps;
      }
      if (witnessed && holds) {
        delta = level;
        count = n;
        break;
      }
    }
    report.deltas.push_back(delta);
    report.counts.push_back(count);
  }
  return report;
}

}  // namespace reference

InclusionCheck check_sequence_inclusion(const CocycleSystem& sys, const Vector& u, std::span<const double> taus,
                                        double epsilon) {
  if (!std::is_sorted(taus.begin(), taus.end())) throw ValidationError("taus", "must be sorted increasing");
  InclusionCheck out;
  const StateNorm norm = sys.norm();
  const auto states = evaluate_affine_at(sys, u, taus);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double d = norm.distance(states[i], u);
    if (i == 0 || d > out.worst_deviation) {
      out.worst_deviation = d;
      out.worst_tau = taus[i];
    }
  }
  out.holds = out.worst_deviation < epsilon;
  return out;
}

ComparabilityReport comparability_from_fixed_point(const FavardResult& result, const CocycleSystem& sys,
                                                   std::span<const double> epsilons, double horizon,
                                                   std::span<const double> delta_grid,
                                                   const ModulusOptions& options) {
  if (result.verdict != Verdict::certified) {
    throw PreconditionError("comparability needs a certified fixed point; verdict is " + to_string(result.verdict) +
                            (result.verdict_reason.empty() ? "" : " (" + result.verdict_reason + ")"));
  }
  return estimate_modulus(sys, result.u_bar, epsilons, horizon, delta_grid, options);
}

std::string comparability_csv(const ComparabilityReport& report) {
  std::ostringstream out;
  out << "epsilon,delta,horizon,count\n";
  for (std::size_t i = 0; i < report.epsilons.size(); ++i) {
    out << format_double(report.epsilons[i]) << ',' << format_double(report.deltas[i]) << ','
        << format_double(report.horizon) << ',' << report.counts[i] << '\n';
  }
  return out.str();
}

}  // namespace favard
