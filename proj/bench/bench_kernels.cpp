// Serial reference kernels against their OpenMP counterparts.
//
//   bench_kernels [repeats]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include <omp.h>

#include "favard/comparability.hpp"
#include "favard/returns.hpp"
#include "favard/signals.hpp"

using namespace favard;

namespace {

double seconds(const std::function<void()>& f, int repeats) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-22s %10.4f %10.4f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              same ? "match" : "MISMATCH");
}

QuasiPeriodicSpec dichotomy() {
  QuasiPeriodicSpec s;
  s.frequencies = {1.0, std::sqrt(2.0)};
  s.matrix_terms.push_back({{0, 0}, Matrix::Constant(1, 1, -1.0), Matrix::Zero(1, 1)});
  s.forcing_terms.push_back({{1, 0}, Vector::Constant(1, 1.0), Vector::Zero(1)});
  s.forcing_terms.push_back({{0, 1}, Vector::Constant(1, 1.0), Vector::Zero(1)});
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-22s %10s %10s %9s\n", "kernel", "serial[s]", "omp[s]", "speedup");

  const CocycleSystem sys(dichotomy(), {0.0, 0.0});
  const ReturnScan scan{0.05, 1000.0, 1.0, 0.01};

  {
    NearReturnSet a;
    NearReturnSet b;
    const double ts = seconds([&] { a = reference::find_near_returns(sys, scan); }, repeats);
    const double tp = seconds([&] { b = find_near_returns(sys, scan); }, repeats);
    bool same = a.returns.size() == b.returns.size();
    for (std::size_t i = 0; same && i < a.returns.size(); ++i) {
      same = a.returns[i].tau == b.returns[i].tau && std::abs(a.returns[i].b[0] - b.returns[i].b[0]) < 1e-9;
    }
    row("find_near_returns", ts, tp, same);
  }
  {
    std::vector<double> taus;
    for (int k = 1; k <= 200; ++k) taus.push_back(5.0 * k);
    std::vector<AffineMapSample> a;
    std::vector<AffineMapSample> b;
    const double ts = seconds([&] { a = reference::affine_map_samples(sys, taus); }, repeats);
    const double tp = seconds([&] { b = affine_map_samples(sys, taus); }, repeats);
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i) same = same && std::abs(a[i].b[0] - b[i].b[0]) < 1e-9;
    row("affine_map_samples", ts, tp, same);
  }
  {
    QuasiPeriodicSpec s = dichotomy();
    const TrajectorySample traj = sample_forcing(s, {0.0, 0.0}, -50.0, 0.05, 12001);
    const AlmostPeriodScan ap{0.5, 50.0, 0.05, 450.0, 0.05};
    AlmostPeriodReport a;
    AlmostPeriodReport b;
    const double ts = seconds([&] { a = reference::scan_almost_periods(traj, ap); }, repeats);
    const double tp = seconds([&] { b = scan_almost_periods(traj, ap); }, repeats);
    row("scan_almost_periods", ts, tp, a.periods == b.periods);
  }
  {
    const Vector u = Vector::Constant(1, 0.5);
    const std::vector<double> eps{0.1, 0.03, 0.01};
    const auto grid = default_comparability_grid();
    ComparabilityReport a;
    ComparabilityReport b;
    const double ts = seconds([&] { a = reference::estimate_modulus(sys, u, eps, 500.0, grid, {100.0}); }, repeats);
    const double tp = seconds([&] { b = estimate_modulus(sys, u, eps, 500.0, grid, {100.0}); }, repeats);
    row("estimate_modulus", ts, tp, a.deltas == b.deltas);
  }
  return 0;
}
