#pragma once

// Shared fixtures, hand-rolled generators and closed-form oracles.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "favard/cocycle.hpp"
#include "favard/quasi_periodic.hpp"

namespace testing {

using favard::Matrix;
using favard::QuasiPeriodicSpec;
using favard::TimeDomain;
using favard::Vector;

inline const double kSqrt2 = std::sqrt(2.0);

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Vector vector(int n, double scale = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(-scale, scale);
    return v;
  }

  Matrix matrix(int rows, int cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = uniform(-scale, scale);
    return m;
  }

  std::vector<int> multi_index(int m, int max_abs = 2) {
    std::vector<int> k(static_cast<std::size_t>(m));
    for (auto& x : k) x = integer(-max_abs, max_abs);
    return k;
  }

  /// Random quasi-periodic spec with `terms` matrix and forcing terms.
  QuasiPeriodicSpec spec(TimeDomain domain, int n, int delay, int terms, double scale) {
    QuasiPeriodicSpec s;
    s.time_domain = domain;
    s.dimension = n;
    s.delay_order = delay;
    s.frequencies = {1.0, kSqrt2};
    const int cols = n * (delay + 1);
    for (int t = 0; t < terms; ++t) {
      s.matrix_terms.push_back({multi_index(2), matrix(n, cols, scale), matrix(n, cols, scale)});
      s.forcing_terms.push_back({multi_index(2), vector(n), vector(n)});
    }
    return s;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline Matrix scalar(double a) { return Matrix::Constant(1, 1, a); }
inline Vector vec1(double a) { return Vector::Constant(1, a); }

/// x' = a x + sum_j c_j cos(k_j . theta) on omega.
inline QuasiPeriodicSpec scalar_ode(double a, std::vector<double> omega,
                                    std::vector<std::pair<std::vector<int>, double>> cos_terms) {
  QuasiPeriodicSpec s;
  s.frequencies = std::move(omega);
  const std::vector<int> zero(s.frequencies.size(), 0);
  s.matrix_terms.push_back({zero, scalar(a), scalar(0.0)});
  for (auto& [k, c] : cos_terms) s.forcing_terms.push_back({k, vec1(c), vec1(0.0)});
  return s;
}

inline QuasiPeriodicSpec dichotomy_spec() { return scalar_ode(-1.0, {1.0, kSqrt2}, {{{1, 0}, 1.0}, {{0, 1}, 1.0}}); }

/// u(t+1) = u(t) + cos(t+1) - cos(t).
inline QuasiPeriodicSpec telescoping_spec() {
  QuasiPeriodicSpec s;
  s.time_domain = TimeDomain::discrete;
  s.frequencies = {1.0};
  s.matrix_terms.push_back({{0}, scalar(1.0), scalar(0.0)});
  s.forcing_terms.push_back({{1}, vec1(std::cos(1.0) - 1.0), vec1(-std::sin(1.0))});
  return s;
}

/// Bounded solution of x' = -x + cos(w t): (cos wt + w sin wt) / (1 + w^2).
inline double damped_cos(double w, double t) { return (std::cos(w * t) + w * std::sin(w * t)) / (1.0 + w * w); }

inline double dichotomy_solution(double t) { return damped_cos(1.0, t) + damped_cos(kSqrt2, t); }

/// sup_j distance of tau*omega_j to 2piZ, computed without the library.
inline double brute_quality(const std::vector<double>& omega, double tau) {
  double q = 0.0;
  for (double w : omega) q = std::max(q, std::abs(std::remainder(tau * w, 2.0 * std::numbers::pi)));
  return q;
}

}  // namespace testing
