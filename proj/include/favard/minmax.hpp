#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "favard/cocycle.hpp"
#include "favard/returns.hpp"
#include "json.hpp"

namespace favard {

/// Minimize l(u) = max_k |Phi_k u + b_k - anchor| over the convex hull of
/// the return points p_k = psi(tau_k, anchor, y0).
struct FavardProblem {
  Vector anchor;
  std::vector<Vector> hull_points;
  NearReturnSet returns;
  StateNorm norm;
};

/// Checks that the seed stays below blowup_factor*(1+|u0|) on
/// [0, returns.horizon] and packages the hull points. Throws BlowUpError
/// for unbounded seeds and PreconditionError for an empty return set.
FavardProblem assemble_problem(const CocycleSystem& sys, const Vector& u0, NearReturnSet returns,
                               double blowup_factor = 1e8);

enum class SolverMethod { simplex_subgradient, grid_oracle };
enum class Verdict { certified, inconclusive };

std::string to_string(SolverMethod method);
std::string to_string(Verdict verdict);
SolverMethod parse_solver_method(const std::string& text);

struct SolverOptions {
  int max_iterations = 10000;
  double stall_tolerance = 1e-8;
  int stall_window = 500;
  /// Residual-curve levels; empty selects default_delta_grid(delta_cap).
  std::vector<double> delta_grid;
  double certification_tolerance = 1e-6;
  int oracle_resolution = 2001;    ///< grid points per axis for a segment hull
  int oracle_resolution_2d = 401;  ///< grid points per axis for a planar hull
};

struct ResidualPoint {
  double delta = 0.0;
  double r = 0.0;
  std::size_t count = 0;  ///< returns with quality <= delta
};

struct OptimizerTrace {
  std::string method;
  int iterations = 0;
  std::string stop_reason;
  double initial_value = 0.0;
  double claimed_value = 0.0;
  int hull_dimension = 0;
  bool degenerate_hull = false;
  std::optional<double> oracle_value;
  std::optional<double> oracle_tolerance;
  bool oracle_agrees = false;
};

struct FixedPointCheck {
  std::vector<ResidualPoint> curve;  ///< decreasing delta, witnessed levels only
  Verdict verdict = Verdict::inconclusive;
  std::string reason;
};

struct FavardResult {
  Vector u_bar;
  std::vector<double> weights;  ///< convex weights of u_bar over the hull points
  double ell_value = 0.0;
  std::vector<ResidualPoint> residual_curve;
  Verdict verdict = Verdict::inconclusive;
  std::string verdict_reason;
  OptimizerTrace trace;
  std::vector<std::string> notices;
};

/// l(u), evaluated directly from the return maps.
double favard_functional(const FavardProblem& problem, const Vector& u);

FavardResult solve_minmax(const FavardProblem& problem, SolverMethod method, const SolverOptions& options = {});

/// delta_cap * 2^-j for j = 0..levels-1.
std::vector<double> default_delta_grid(double delta_cap, int levels = 10);

/// r(delta) = max over returns with quality <= delta of |Phi u + b - u|.
FixedPointCheck verify_fixed_point(const CocycleSystem& sys, const Vector& u_bar, const NearReturnSet& returns,
                                   std::span<const double> delta_grid, double tolerance);

/// max(1e-6, 10 h^4): the fixed-point residual cannot beat the integrator.
double default_certification_tolerance(const CocycleSystem& sys);

/// Euclidean projection onto the unit simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

/// Convex weights of the point of conv(points) closest to `target`
/// (Wolfe's minimum-norm-point algorithm, Euclidean norm).
std::vector<double> nearest_hull_weights(std::span<const Vector> points, const Vector& target);

nlohmann::json to_json(const FavardResult& result);

}  // namespace favard
