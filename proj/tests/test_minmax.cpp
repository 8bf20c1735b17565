#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "favard/errors.hpp"
#include "favard/minmax.hpp"
#include "support.hpp"

using namespace favard;
using namespace testing;

namespace {

FavardProblem problem_for(const CocycleSystem& sys, const Vector& u0, const ReturnScan& scan) {
  return assemble_problem(sys, u0, find_near_returns(sys, scan));
}

// Synthetic problem with hand-picked maps; the hull points need not be
// orbit points for the optimizer to be well defined.
FavardProblem synthetic(Gen& g, int n, int K, double phi_scale) {
  FavardProblem p;
  p.anchor = g.vector(n);
  p.norm = StateNorm{};
  for (int k = 0; k < K; ++k) {
    AffineMapSample s;
    s.tau = k + 1.0;
    s.Phi = g.matrix(n, n, phi_scale);
    s.b = g.vector(n);
    p.returns.returns.push_back(s);
    p.hull_points.push_back(g.vector(n, 2.0));
  }
  return p;
}

// Exact minimum of max_k |a_k u + c_k| over [lo, hi]: a convex piecewise
// linear function attains it at an endpoint or at a breakpoint.
double exact_1d_minimum(const std::vector<double>& a, const std::vector<double>& c, double lo, double hi) {
  auto f = [&](double u) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] * u + c[k]));
    return m;
  };
  std::vector<double> cand{lo, hi};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != 0.0) cand.push_back(-c[i] / a[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (a[i] != a[j]) cand.push_back((c[j] - c[i]) / (a[i] - a[j]));
      if (a[i] != -a[j]) cand.push_back(-(c[j] + c[i]) / (a[i] + a[j]));
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (double u : cand) {
    if (u >= lo && u <= hi) best = std::min(best, f(u));
  }
  return best;
}

}  // namespace

TEST_CASE("equilibrium: every return point is the seed") {
  // x' = -x + 1 written with a constant forcing term.
  QuasiPeriodicSpec spec = scalar_ode(-1.0, {1.0}, {{{0}, 1.0}});
  const CocycleSystem eq(spec, {0.0});
  const FavardProblem p = problem_for(eq, vec1(1.0), {0.05, 50.0, 1.0, 0.0});
  const FavardResult r = solve_minmax(p, SolverMethod::simplex_subgradient);
  CHECK(std::abs(r.u_bar[0] - 1.0) < 1e-9);
  CHECK(r.ell_value < 1e-9);
}

TEST_CASE("telescoping recursion: minimizer is the hull endpoint nearest the seed") {
  // u(t) = u0 + cos t - 1 on the base phase 0, so Phi_k = 1, b_k = cos(tau_k) - 1 <= 0
  // and the hull is [u0 + min b, u0 + max b]. The unconstrained minimizer
  // u0 - (min b + max b)/2 lies above the hull, so u_bar = u0 + max b and
  // l(u_bar) = -(min b + max b).
  const CocycleSystem sys(telescoping_spec(), {0.0});
  const double u0 = 0.3;
  const FavardProblem p = problem_for(sys, vec1(u0), {0.1, 300.0, 1.0, 0.0});
  double bmin = 0.0;
  double bmax = -1.0;
  for (const auto& r : p.returns.returns) {
    const double b = std::cos(r.tau) - 1.0;
    CHECK(std::abs(r.b[0] - b) < 1e-12);
    bmin = std::min(bmin, b);
    bmax = std::max(bmax, b);
  }
  for (auto method : {SolverMethod::simplex_subgradient, SolverMethod::grid_oracle}) {
    const FavardResult r = solve_minmax(p, method);
    CHECK(std::abs(r.ell_value + bmin + bmax) < 1e-8);
    if (method == SolverMethod::simplex_subgradient) CHECK(std::abs(r.u_bar[0] - (u0 + bmax)) < 1e-8);
  }
}

TEST_CASE("dichotomy: hull points follow the bounded solution") {
  // x' = -x + cos t + cos(sqrt2 t) has the bounded solution xbar; a seed on
  // it keeps every hull point on it, and u_bar stays in their hull.
  const CocycleSystem sys(dichotomy_spec(), {0.0, 0.0});
  const double x0 = dichotomy_solution(0.0);
  CHECK(x0 == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  const FavardProblem p = problem_for(sys, vec1(x0), {0.05, 1000.0, 1.0, 0.01});
  REQUIRE(p.hull_points.size() > 3);
  double spread = 0.0;
  for (std::size_t k = 0; k < p.hull_points.size(); ++k) {
    CHECK(std::abs(p.hull_points[k][0] - dichotomy_solution(p.returns.returns[k].tau)) < 1e-9);
    spread = std::max(spread, std::abs(p.hull_points[k][0] - x0));
  }
  // |xbar(tau) - xbar(0)| <= sum of component gradient bounds times delta.
  CHECK(spread <= (1.0 / std::sqrt(2.0) + std::sqrt(2.0 / 3.0) / std::sqrt(2.0)) * 0.05 + 1e-9);
  const FavardResult r = solve_minmax(p, SolverMethod::simplex_subgradient);
  CHECK(std::abs(r.u_bar[0] - x0) <= spread + 1e-12);
  CHECK(r.trace.oracle_agrees);
}

TEST_CASE("no hull vertex beats the reported minimizer") {
  Gen g(5);
  for (int trial = 0; trial < 30; ++trial) {
    const FavardProblem p = synthetic(g, g.integer(1, 3), g.integer(2, 12), 1.0);
    const FavardResult r = solve_minmax(p, SolverMethod::simplex_subgradient);
    for (const auto& v : p.hull_points) CHECK(r.ell_value <= favard_functional(p, v) + 1e-12);
    const double sum = std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (double w : r.weights) CHECK(w >= 0.0);
  }
}

TEST_CASE("minimum value does not depend on the order of the returns") {
  Gen g(6);
  for (int trial = 0; trial < 20; ++trial) {
    FavardProblem p = synthetic(g, 1, g.integer(3, 10), 0.5);
    const FavardResult a = solve_minmax(p, SolverMethod::grid_oracle);
    std::vector<std::size_t> perm(p.hull_points.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g.engine());
    FavardProblem q = p;
    for (std::size_t k = 0; k < perm.size(); ++k) {
      q.hull_points[k] = p.hull_points[perm[k]];
      q.returns.returns[k] = p.returns.returns[perm[k]];
    }
    const FavardResult b = solve_minmax(q, SolverMethod::grid_oracle);
    CHECK(std::abs(a.ell_value - b.ell_value) < 1e-12);
  }
}

TEST_CASE("one-dimensional hulls: subgradient descent matches the exact breakpoint minimum") {
  Gen g(7);
  for (int trial = 0; trial < 200; ++trial) {
    const FavardProblem p = synthetic(g, 1, g.integer(2, 8), 1.0);
    std::vector<double> a;
    std::vector<double> c;
    double lo = 1e300;
    double hi = -1e300;
    for (std::size_t k = 0; k < p.hull_points.size(); ++k) {
      a.push_back(p.returns.returns[k].Phi(0, 0));
      c.push_back(p.returns.returns[k].b[0] - p.anchor[0]);
      lo = std::min(lo, p.hull_points[k][0]);
      hi = std::max(hi, p.hull_points[k][0]);
    }
    const double exact = exact_1d_minimum(a, c, lo, hi);
    const FavardResult r = solve_minmax(p, SolverMethod::simplex_subgradient);
    CHECK(r.ell_value >= exact - 1e-12);
    CHECK(r.ell_value <= exact + 1e-6);
    REQUIRE(r.trace.oracle_value.has_value());
    CHECK(std::abs(*r.trace.oracle_value - exact) <= *r.trace.oracle_tolerance);
    CHECK(r.trace.oracle_agrees);
  }
}

TEST_CASE("planar hulls: descent agrees with the grid oracle") {
  Gen g(9);
  for (int trial = 0; trial < 50; ++trial) {
    const FavardProblem p = synthetic(g, 2, g.integer(3, 7), 0.7);
    const FavardResult r = solve_minmax(p, SolverMethod::simplex_subgradient);
    REQUIRE(r.trace.oracle_value.has_value());
    CHECK(r.trace.hull_dimension == 2);
    CHECK(r.ell_value <= *r.trace.oracle_value + *r.trace.oracle_tolerance);
  }
}

TEST_CASE("grid oracle refuses hulls of dimension three") {
  Gen g(10);
  const FavardProblem p = synthetic(g, 3, 6, 0.5);
  CHECK_THROWS_AS(solve_minmax(p, SolverMethod::grid_oracle), PreconditionError);
  const FavardResult r = solve_minmax(p, SolverMethod::simplex_subgradient);
  CHECK_FALSE(r.trace.oracle_value.has_value());
}

TEST_CASE("degenerate hull is reported, not an error") {
  FavardProblem p;
  p.anchor = vec1(0.0);
  for (int k = 0; k < 3; ++k) {
    p.returns.returns.push_back({k + 1.0, scalar(0.5), vec1(1.0), 0.0});
    p.hull_points.push_back(vec1(2.0));
  }
  const FavardResult r = solve_minmax(p, SolverMethod::simplex_subgradient);
  CHECK(r.trace.degenerate_hull);
  CHECK(r.u_bar[0] == 2.0);
  CHECK(r.ell_value == 2.0);
  CHECK_FALSE(r.notices.empty());
}

TEST_CASE("simplex projection") {
  CHECK(project_to_simplex(std::vector<double>{0.2, 0.3, 0.5}) == std::vector<double>{0.2, 0.3, 0.5});
  CHECK(project_to_simplex(std::vector<double>{2.0, 0.0}) == std::vector<double>{1.0, 0.0});
  const auto half = project_to_simplex(std::vector<double>{1.0, 1.0});
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);

  // KKT conditions: w = max(v - theta, 0) with a common theta.
  Gen g(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = g.integer(1, 12);
    std::vector<double> v(static_cast<std::size_t>(K));
    for (double& x : v) x = g.uniform(-2.0, 2.0);
    const auto w = project_to_simplex(v);
    double sum = 0.0;
    double theta = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < w.size(); ++k) {
      CHECK(w[k] >= 0.0);
      sum += w[k];
      if (w[k] > 0.0) {
        if (std::isnan(theta)) theta = v[k] - w[k];
        CHECK(std::abs(v[k] - w[k] - theta) < 1e-12);
      }
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] == 0.0) CHECK(v[k] <= theta + 1e-12);
    }
  }
}

TEST_CASE("nearest hull point") {
  const std::vector<Vector> seg{vec1(1.0), vec1(3.0)};
  auto w = nearest_hull_weights(seg, vec1(2.5));
  CHECK(std::abs(w[0] - 0.25) < 1e-12);
  CHECK(std::abs(w[1] - 0.75) < 1e-12);
  w = nearest_hull_weights(seg, vec1(0.0));
  CHECK(w[0] == 1.0);

  // Projection characterization: <target - x, p - x> <= 0 for every vertex p.
  Gen g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = g.integer(1, 4);
    std::vector<Vector> pts;
    for (int k = 0, K = g.integer(1, 9); k < K; ++k) pts.push_back(g.vector(n));
    const Vector target = g.vector(n, 2.0);
    const auto wt = nearest_hull_weights(pts, target);
    Vector x = Vector::Zero(n);
    for (std::size_t k = 0; k < pts.size(); ++k) x += wt[k] * pts[k];
    for (const auto& p : pts) CHECK((target - x).dot(p - x) <= 1e-9);
    CHECK(std::abs(std::accumulate(wt.begin(), wt.end(), 0.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("fixed-point residual curve") {
  const CocycleSystem sys(dichotomy_spec(), {0.0, 0.0});
  const double x0 = dichotomy_solution(0.0);
  const NearReturnSet returns = find_near_returns(sys, {0.05, 2000.0, 1.0, 0.01});
  const auto grid = default_delta_grid(0.05);
  CHECK(grid.size() == 10);
  CHECK(grid.back() == std::ldexp(0.05, -9));

  const FixedPointCheck good = verify_fixed_point(sys, vec1(x0), returns, grid, default_certification_tolerance(sys));
  CHECK(good.verdict == Verdict::certified);
  for (std::size_t i = 1; i < good.curve.size(); ++i) CHECK(good.curve[i].delta < good.curve[i - 1].delta);

  // Negative control: u + 1 misses by at least (1 - Phi_k) - r(u) at every return.
  const FixedPointCheck bad = verify_fixed_point(sys, vec1(x0 + 1.0), returns, grid, 1e-6);
  CHECK(bad.verdict == Verdict::inconclusive);
  const double tau_min = returns.returns.front().tau;
  CHECK(bad.curve.back().r >= (1.0 - std::exp(-tau_min)) / 2.0);
}

TEST_CASE("certification tolerance") {
  CHECK(default_certification_tolerance(CocycleSystem(dichotomy_spec(), {0.0, 0.0})) == 1e-6);
  CHECK(default_certification_tolerance(CocycleSystem(dichotomy_spec(), {0.0, 0.0}, 0.1)) ==
        doctest::Approx(1e-3));
  CHECK(default_certification_tolerance(CocycleSystem(telescoping_spec(), {0.0})) == 1e-6);
}

TEST_CASE("assembly checks boundedness before anything else") {
  const CocycleSystem grow(scalar_ode(0.1, {1.0}, {{{0}, 1.0}}), {0.0});
  NearReturnSet returns = find_near_returns(grow, {0.05, 300.0, 1.0, 0.0});
  CHECK_THROWS_AS(assemble_problem(grow, vec1(0.0), returns), BlowUpError);
  const CocycleSystem sys(dichotomy_spec(), {0.0, 0.0});
  NearReturnSet none = find_near_returns(sys, {0.001, 20.0, 1.0, 0.01});
  CHECK_THROWS_AS(assemble_problem(sys, vec1(0.0), none), PreconditionError);
  CHECK_THROWS_AS(assemble_problem(sys, Vector::Zero(2), none), ValidationError);
}

TEST_CASE("method names") {
  CHECK(parse_solver_method("grid_oracle") == SolverMethod::grid_oracle);
  CHECK(to_string(SolverMethod::simplex_subgradient) == "simplex_subgradient");
  CHECK_THROWS_AS(parse_solver_method("newton"), ValidationError);
  CHECK(to_string(Verdict::certified) == "certified");
}
