#include "favard/returns.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "favard/errors.hpp"
#include "favard/io.hpp"

namespace favard {

namespace {

double grid_step(const CocycleSystem& sys, const ReturnScan& scan) {
  if (sys.is_discrete()) return 1.0;
  if (scan.scan_step == 0.0) return sys.step();
  const double ratio = scan.scan_step / sys.step();
  const double stride = std::round(ratio);
  if (!(scan.scan_step > 0.0) || stride < 1.0 || std::abs(ratio - stride) > 1e-9 * ratio) {
    throw ValidationError("scan_step", "must be a positive integer multiple of the integrator step");
  }
  return stride * sys.step();
}

void validate_scan(const ReturnScan& scan) {
  if (!(scan.delta_cap > 0.0) || scan.delta_cap > std::numbers::pi) {
    throw ValidationError("delta_cap", "must lie in (0, pi]");
  }
  if (!(scan.min_tau >= 0.0)) throw ValidationError("min_tau", "must be nonnegative");
  if (!(scan.horizon > scan.min_tau)) throw ValidationError("horizon", "must exceed min_tau");
}

NearReturnSet package(const ReturnScan& scan, double step, std::size_t scanned,
                      std::vector<AffineMapSample> samples) {
  NearReturnSet set;
  set.returns = std::move(samples);
  set.delta_cap = scan.delta_cap;
  set.horizon = scan.horizon;
  set.min_tau = scan.min_tau;
  set.scan_step = step;
  set.scanned = scanned;
  return set;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

std::vector<double> return_scan_grid(const CocycleSystem& sys, const ReturnScan& scan) {
  validate_scan(scan);
  const double step = grid_step(sys, scan);
  const auto k_lo = static_cast<long>(std::ceil(scan.min_tau / step - 1e-9));
  const auto k_hi = static_cast<long>(std::floor(scan.horizon / step + 1e-9));
  std::vector<double> grid;
  if (k_hi >= k_lo) grid.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
  for (long k = k_lo; k <= k_hi; ++k) grid.push_back(static_cast<double>(k) * step);
  return grid;
}

NearReturnSet find_near_returns(const CocycleSystem& sys, const ReturnScan& scan) {
  const std::vector<double> grid = return_scan_grid(sys, scan);
  std::vector<char> hit(grid.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(grid.size()); ++i) {
    hit[static_cast<std::size_t>(i)] = sys.return_quality(grid[static_cast<std::size_t>(i)]) <= scan.delta_cap;
  }
  std::vector<double> taus;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (hit[i]) taus.push_back(grid[i]);
  }
  return package(scan, grid_step(sys, scan), grid.size(), affine_map_samples(sys, taus));
}

namespace reference {

NearReturnSet find_near_returns(const CocycleSystem& sys, const ReturnScan& scan) {
  const std::vector<double> grid = return_scan_grid(sys, scan);
  std::vector<double> taus;
  for (double tau : grid) {
    if (sys.return_quality(tau) <= scan.delta_cap) taus.push_back(tau);
  }
  return package(scan, grid_step(sys, scan), grid.size(), reference::affine_map_samples(sys, taus));
}

}  // namespace reference

ComposedReturn compose_returns(const AffineMapSample& a, const AffineMapSample& b, const CocycleSystem& sys) {
  ComposedReturn out;
  out.sample = affine_map_sample(sys, a.tau + b.tau);
  const AffineMapSample algebraic = compose_maps(a, b);
  out.defect = std::max(max_abs(out.sample.Phi - algebraic.Phi), max_abs(out.sample.b - algebraic.b));
  return out;
}

NearReturnSet extend_with_compositions(const NearReturnSet& set, const CocycleSystem& sys, int depth,
                                       std::size_t max_new) {
  if (depth < 0) throw ValidationError("composition_depth", "must be nonnegative");
  NearReturnSet out = set;
  const double step = set.scan_step > 0.0 ? set.scan_step : (sys.is_discrete() ? 1.0 : sys.step());
  for (int level = 0; level < depth && !out.returns.empty(); ++level) {
    std::map<long, double> present;
    for (const auto& r : out.returns) present.emplace(std::lround(r.tau / step), r.tau);
    // grid index -> (tau, index of outer factor, index of inner factor)
    struct Pair {
      double tau;
      std::size_t a;
      std::size_t b;
    };
    std::map<long, Pair> fresh;
    const auto& rs = out.returns;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      for (std::size_t j = i; j < rs.size(); ++j) {
        const long key = std::lround(rs[i].tau / step) + std::lround(rs[j].tau / step);
        if (present.count(key) || fresh.count(key)) continue;
        const double tau = static_cast<double>(key) * step;
        if (sys.return_quality(tau) > set.delta_cap) continue;
        fresh.emplace(key, Pair{tau, i, j});
      }
    }
    if (fresh.empty()) break;
    std::vector<double> taus;
    std::vector<Pair> pairs;
    for (const auto& [key, pair] : fresh) {
      if (taus.size() >= max_new) break;
      taus.push_back(pair.tau);
      pairs.push_back(pair);
    }
    const auto samples = affine_map_samples(sys, taus);
    std::vector<AffineMapSample> merged = out.returns;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const AffineMapSample algebraic = compose_maps(rs[pairs[i].a], rs[pairs[i].b]);
      const double defect =
          std::max(max_abs(samples[i].Phi - algebraic.Phi), max_abs(samples[i].b - algebraic.b));
      out.max_composition_defect = std::max(out.max_composition_defect, defect);
      merged.push_back(samples[i]);
    }
    std::sort(merged.begin(), merged.end(),
              [](const AffineMapSample& x, const AffineMapSample& y) { return x.tau < y.tau; });
    out.composed += samples.size();
    out.returns = std::move(merged);
  }
  return out;
}

std::string returns_csv(const NearReturnSet& set) {
  std::ostringstream out;
  out << "tau,delta";
  if (!set.returns.empty()) {
    const auto& first = set.returns.front();
    for (Eigen::Index i = 0; i < first.Phi.rows(); ++i) {
      for (Eigen::Index j = 0; j < first.Phi.cols(); ++j) out << ",Phi_" << i << '_' << j;
    }
    for (Eigen::Index i = 0; i < first.b.size(); ++i) out << ",b_" << i;
  }
  out << '\n';
  for (const auto& r : set.returns) {
    out << format_double(r.tau) << ',' << format_double(r.delta);
    for (Eigen::Index i = 0; i < r.Phi.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.Phi.cols(); ++j) out << ',' << format_double(r.Phi(i, j));
    }
    for (Eigen::Index i = 0; i < r.b.size(); ++i) out << ',' << format_double(r.b[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace favard
