#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favard/norms.hpp"
#include "json.hpp"

namespace favard {

enum class TimeDomain { continuous, discrete };

std::string to_string(TimeDomain domain);

// Trigonometric polynomial terms on the torus. A term with multi-index k
// contributes cos_coeff * cos(k.theta) + sin_coeff * sin(k.theta).
struct MatrixTerm {
  std::vector<int> k;
  Matrix cos;
  Matrix sin;
};

struct VectorTerm {
  std::vector<int> k;
  Vector cos;
  Vector sin;
};

struct ScalarTerm {
  std::vector<int> k;
  double cos = 0.0;
  double sin = 0.0;
};

/// forcing(theta) = p(theta) / (c + q(theta)).
struct Reciprocal {
  double c = 0.0;
  std::vector<ScalarTerm> q_terms;
  double eta = 1e-6;  ///< |denominator| below this is an error
};

/// Coefficients A(theta), f(theta) of a linear equation whose time
/// dependence is the torus flow theta0 + t*omega.
///
/// In the delay case the matrix is n x n(r+1) and acts on the stacked
/// history (u(t), u(t-1), ..., u(t-r)).
struct QuasiPeriodicSpec {
  std::vector<double> frequencies;
  std::vector<MatrixTerm> matrix_terms;
  std::vector<VectorTerm> forcing_terms;
  std::optional<Reciprocal> reciprocal;
  TimeDomain time_domain = TimeDomain::continuous;
  int dimension = 1;
  int delay_order = 0;

  int torus_dim() const { return static_cast<int>(frequencies.size()); }
  int state_dim() const { return dimension * (delay_order + 1); }
  bool is_discrete() const { return time_domain == TimeDomain::discrete; }

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

using TorusPoint = std::vector<double>;

/// Reduce an angle to [0, 2pi).
double wrap_angle(double x);

/// Distance between two angles on the circle, in [0, pi].
double angular_distance(double a, double b);

/// theta0 + t*omega, reduced coordinate-wise to [0, 2pi).
TorusPoint advance_phase(const TorusPoint& theta0, std::span<const double> omega, double t);

/// Sup over torus coordinates of the angular distance between
/// sigma(tau, y) and y; independent of the starting phase.
double return_quality(std::span<const double> omega, double tau);

struct Coefficients {
  Matrix A;
  Vector f;
  double min_denominator = 0.0;  ///< |c + q| when a reciprocal wrapper is present
  bool near_singular = false;    ///< denominator inside the warning band
};

/// Reciprocal denominators below this (and above eta) raise the
/// near_singular flag instead of failing.
inline constexpr double kReciprocalWarnBand = 1e-3;

Coefficients eval_torus(const QuasiPeriodicSpec& spec, std::span<const double> theta);

/// Coefficients along the base flow at time t (t integral in discrete time).
Coefficients eval_base(const QuasiPeriodicSpec& spec, const TorusPoint& theta0, double t);

/// Hot-path evaluation into preallocated storage. The phase buffer is
/// scratch space of size torus_dim().
void eval_base_into(const QuasiPeriodicSpec& spec, const TorusPoint& theta0, double t,
                    std::vector<double>& phase, Matrix& A, Vector& f);

nlohmann::json to_json(const QuasiPeriodicSpec& spec);

/// Strict parse: unknown fields and missing required fields are
/// ValidationErrors naming the field.
QuasiPeriodicSpec spec_from_json(const nlohmann::json& doc);

}  // namespace favard
