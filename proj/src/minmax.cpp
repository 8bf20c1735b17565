#include "favard/minmax.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "favard/errors.hpp"
#include "favard/io.hpp"

namespace favard {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Return maps stacked for fast evaluation of l: rows k*N..k*N+N-1 hold Phi_k.
struct StackedMaps {
  Matrix Phi;
  Vector shift;  // b_k - anchor, stacked
  Eigen::Index N = 0;
  std::size_t K = 0;

  explicit StackedMaps(const FavardProblem& p) {
    N = p.anchor.size();
    K = p.returns.returns.size();
    Phi.resize(N * static_cast<Eigen::Index>(K), N);
    shift.resize(N * static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
      const auto& r = p.returns.returns[k];
      Phi.middleRows(static_cast<Eigen::Index>(k) * N, N) = r.Phi;
      shift.segment(static_cast<Eigen::Index>(k) * N, N) = r.b - p.anchor;
    }
  }

  // l(u) and the index of an active return.
  std::pair<double, std::size_t> value(const Vector& u, const StateNorm& norm) const {
    const Vector all = Phi * u + shift;
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const double v = norm(Vector(all.segment(static_cast<Eigen::Index>(k) * N, N)));
      if (v > best) {
        best = v;
        arg = k;
      }
    }
    return {best, arg};
  }

  Vector residual(const Vector& u, std::size_t k) const {
    const auto row = static_cast<Eigen::Index>(k) * N;
    return Phi.middleRows(row, N) * u + shift.segment(row, N);
  }
};

Matrix hull_matrix(const FavardProblem& p) {
  Matrix P(p.anchor.size(), static_cast<Eigen::Index>(p.hull_points.size()));
  for (std::size_t k = 0; k < p.hull_points.size(); ++k) P.col(static_cast<Eigen::Index>(k)) = p.hull_points[k];
  return P;
}

Vector combine(const Matrix& P, const std::vector<double>& w) {
  return P * Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
}

struct AffineBasis {
  Vector origin;
  Matrix directions;  // N x dim, orthonormal columns
  int dim = 0;
};

AffineBasis affine_basis(const Matrix& P) {
  AffineBasis basis;
  basis.origin = P.col(0);
  const Matrix D = P.colwise() - basis.origin;
  Eigen::JacobiSVD<Matrix> svd(D, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double scale = std::max(sv.size() ? sv[0] : 0.0, P.cwiseAbs().maxCoeff());
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-10 * std::max(scale, 1e-300)) ++rank;
  }
  basis.dim = rank;
  basis.directions = svd.matrixU().leftCols(rank);
  return basis;
}

double lipschitz_bound(const FavardProblem& p) {
  double lip = 0.0;
  for (const auto& r : p.returns.returns) {
    Eigen::JacobiSVD<Matrix> svd(r.Phi);
    lip = std::max(lip, svd.singularValues().size() ? svd.singularValues()[0] : 0.0);
  }
  if (p.norm.kind == NormKind::delay_sum && p.norm.block > 0) {
    lip *= std::sqrt(static_cast<double>(p.anchor.size() / p.norm.block));
  }
  return lip;
}

// ---- grid oracle ---------------------------------------------------------

struct OracleResult {
  Vector u;
  std::vector<double> weights;
  double value = kInf;
  double spacing = 0.0;
};

struct Candidate {
  double value = kInf;
  double anchor_dist = kInf;
  Vector u;
  std::vector<double> weights;
};

void consider(Candidate& best, const StackedMaps& maps, const FavardProblem& p, const Vector& u,
              const std::function<std::vector<double>()>& weights) {
  const double v = maps.value(u, p.norm).first;
  const double d = (u - p.anchor).norm();
  const double slack = 1e-14 * (1.0 + std::abs(best.value));
  if (v < best.value - slack || (std::abs(v - best.value) <= slack && d < best.anchor_dist)) {
    best.value = v;
    best.anchor_dist = d;
    best.u = u;
    best.weights = weights();
  }
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Indices of the convex hull in counter-clockwise order (monotone chain).
std::vector<std::size_t> convex_hull_2d(const std::vector<Eigen::Vector2d>& pts) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x() < pts[b].x() || (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
  });
  std::vector<std::size_t> hull(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i : idx) {
    while (k >= 2 && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[i]) <= 0) --k;
    hull[k++] = i;
  }
  for (std::size_t t = idx.size() - 1, lower = k + 1; t-- > 0;) {
    const std::size_t i = idx[t];
    while (k >= lower && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[i]) <= 0) --k;
    hull[k++] = i;
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

OracleResult grid_oracle(const FavardProblem& p, const StackedMaps& maps, const Matrix& P,
                         const AffineBasis& basis, const SolverOptions& opt) {
  const std::size_t K = p.hull_points.size();
  Candidate best;
  OracleResult out;
  if (basis.dim == 0) {
    consider(best, maps, p, P.col(0), [&] {
      std::vector<double> w(K, 0.0);
      w[0] = 1.0;
      return w;
    });
  } else if (basis.dim == 1) {
    const Vector d = basis.directions.col(0);
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::vector<double> s(K);
    for (std::size_t k = 0; k < K; ++k) {
      s[k] = d.dot(P.col(static_cast<Eigen::Index>(k)) - basis.origin);
      if (s[k] < s[lo]) lo = k;
      if (s[k] > s[hi]) hi = k;
    }
    const int res = std::max(opt.oracle_resolution, 2);
    const double width = s[hi] - s[lo];
    out.spacing = width / (res - 1);
    for (int i = 0; i < res; ++i) {
      const double frac = static_cast<double>(i) / (res - 1);
      const Vector u = P.col(static_cast<Eigen::Index>(lo)) * (1.0 - frac) + P.col(static_cast<Eigen::Index>(hi)) * frac;
      consider(best, maps, p, u, [&] {
        std::vector<double> w(K, 0.0);
        w[lo] += 1.0 - frac;
        w[hi] += frac;
        return w;
      });
    }
  } else if (basis.dim == 2) {
    std::vector<Eigen::Vector2d> pts(K);
    for (std::size_t k = 0; k < K; ++k) {
      pts[k] = basis.directions.transpose() * (P.col(static_cast<Eigen::Index>(k)) - basis.origin);
    }
    const auto hull = convex_hull_2d(pts);
    Eigen::Vector2d lo = pts[hull[0]];
    Eigen::Vector2d hi = pts[hull[0]];
    for (std::size_t i : hull) {
      lo = lo.cwiseMin(pts[i]);
      hi = hi.cwiseMax(pts[i]);
    }
    const int res = std::max(opt.oracle_resolution_2d, 2);
    const Eigen::Vector2d cell = (hi - lo) / (res - 1);
    out.spacing = cell.norm();

    // Barycentric weights through a fan triangulation from hull[0].
    auto weights_of = [&](const Eigen::Vector2d& q) {
      std::vector<double> w(K, 0.0);
      const auto& a = pts[hull[0]];
      for (std::size_t t = 1; t + 1 < hull.size(); ++t) {
        const auto& b = pts[hull[t]];
        const auto& c = pts[hull[t + 1]];
        const double area = cross(a, b, c);
        const double wb = cross(a, q, c) / -area;
        const double wc = cross(a, b, q) / area;
        const double wa = 1.0 - wb - wc;
        const double tol = -1e-9;
        if (wa >= tol && wb >= tol && wc >= tol) {
          w[hull[0]] = std::max(wa, 0.0);
          w[hull[t]] = std::max(wb, 0.0);
          w[hull[t + 1]] = std::max(wc, 0.0);
          const double sum = w[hull[0]] + w[hull[t]] + w[hull[t + 1]];
          for (double& x : w) x /= sum;
          return w;
        }
      }
      w[hull[0]] = 1.0;
      return w;
    };
    auto inside = [&](const Eigen::Vector2d& q) {
      const double tol = 1e-12 * std::max(1.0, (hi - lo).norm());
      for (std::size_t i = 0; i < hull.size(); ++i) {
        if (cross(pts[hull[i]], pts[hull[(i + 1) % hull.size()]], q) < -tol) return false;
      }
      return true;
    };
    auto lift = [&](const Eigen::Vector2d& q) { return Vector(basis.origin + basis.directions * q); };

    for (int i = 0; i < res; ++i) {
      for (int j = 0; j < res; ++j) {
        const Eigen::Vector2d q(lo.x() + i * cell.x(), lo.y() + j * cell.y());
        if (!inside(q)) continue;
        consider(best, maps, p, lift(q), [&] { return weights_of(q); });
      }
    }
    // Edges, so thin hulls are resolved as finely as the interior.
    for (std::size_t e = 0; e < hull.size(); ++e) {
      const auto& a = pts[hull[e]];
      const auto& b = pts[hull[(e + 1) % hull.size()]];
      for (int i = 0; i < res; ++i) {
        const double frac = static_cast<double>(i) / (res - 1);
        const Eigen::Vector2d q = a * (1.0 - frac) + b * frac;
        consider(best, maps, p, lift(q), [&] {
          std::vector<double> w(K, 0.0);
          w[hull[e]] += 1.0 - frac;
          w[hull[(e + 1) % hull.size()]] += frac;
          return w;
        });
      }
    }
  } else {
    throw PreconditionError("grid oracle needs a hull of affine dimension <= 2, got " + std::to_string(basis.dim));
  }
  out.u = best.u;
  out.weights = best.weights;
  out.value = best.value;
  return out;
}

// ---- projected subgradient -----------------------------------------------

struct DescentResult {
  std::vector<double> weights;
  double value = 0.0;
  double initial = 0.0;
  int iterations = 0;
  std::string stop_reason;
};

DescentResult projected_subgradient(const FavardProblem& p, const StackedMaps& maps, const Matrix& P,
                                    std::vector<double> lambda, const SolverOptions& opt) {
  DescentResult out;
  auto eval = [&](const std::vector<double>& w) { return maps.value(combine(P, w), p.norm); };
  auto [value, active] = eval(lambda);
  out.initial = value;
  std::vector<double> best = lambda;
  double best_value = value;
  double window_start = best_value;
  // Variable target: aim gamma below the best value and halve gamma whenever
  // the target is not approached for a while, restarting from the best iterate.
  double gamma = 0.1 * value;
  double reference_value = value;
  int since_progress = 0;
  constexpr int kPatience = 100;
  out.stop_reason = "max_iterations";
  if (value == 0.0) {
    out.stop_reason = "optimal";
  } else {
    for (int it = 1; it <= opt.max_iterations; ++it) {
      out.iterations = it;
      // Direction: the minimum-norm element of the hull of the subgradients
      // of all gamma-active returns, restricted to the simplex tangent space.
      // A single active subgradient zigzags across the ridges of l.
      const Vector u = combine(P, lambda);
      std::vector<std::pair<double, std::size_t>> near;
      for (std::size_t k = 0; k < maps.K; ++k) {
        const double v = p.norm(maps.residual(u, k));
        if (v >= value - gamma) near.emplace_back(v, k);
      }
      std::sort(near.begin(), near.end(), std::greater<>());
      if (near.size() > 32) near.resize(32);
      std::vector<Vector> grads;
      for (const auto& [v, k] : near) {
        const auto row = static_cast<Eigen::Index>(k) * maps.N;
        Vector g = P.transpose() * (maps.Phi.middleRows(row, maps.N).transpose() * p.norm.subgradient(maps.residual(u, k)));
        g.array() -= g.mean();
        grads.push_back(std::move(g));
      }
      const std::vector<double> mix = nearest_hull_weights(grads, Vector::Zero(grads.front().size()));
      Vector g = Vector::Zero(grads.front().size());
      for (std::size_t i = 0; i < grads.size(); ++i) g += mix[i] * grads[i];
      const double gn2 = g.squaredNorm();
      if (!(std::sqrt(gn2) > 1e-14 * (1.0 + value))) {
        if (near.size() == 1) {
          out.stop_reason = "stationary";
          break;
        }
        // Stationary only up to gamma: sharpen the target.
        gamma *= 0.5;
        if (gamma <= 1e-15 * (1.0 + best_value)) {
          out.stop_reason = "converged";
          break;
        }
        continue;
      }
      const double target = best_value - gamma;
      const double step = (value - target) / gn2;
      std::vector<double> moved(lambda.size());
      for (std::size_t k = 0; k < lambda.size(); ++k) moved[k] = lambda[k] - step * g[static_cast<Eigen::Index>(k)];
      lambda = project_to_simplex(moved);
      std::tie(value, active) = eval(lambda);
      if (value < best_value) {
        best_value = value;
        best = lambda;
      }
      if (best_value <= reference_value - 0.5 * gamma) {
        reference_value = best_value;
        since_progress = 0;
      } else if (++since_progress >= kPatience) {
        gamma *= 0.5;
        reference_value = best_value;
        since_progress = 0;
        lambda = best;
        std::tie(value, active) = eval(lambda);
      }
      if (gamma <= 1e-15 * (1.0 + best_value)) {
        out.stop_reason = "converged";
        break;
      }
      if (it % opt.stall_window == 0) {
        // A stall only counts once the target gap itself is below tolerance.
        if (window_start - best_value < opt.stall_tolerance && gamma < opt.stall_tolerance) {
          out.stop_reason = "stall";
          break;
        }
        window_start = best_value;
      }
    }
  }
  out.weights = std::move(best);
  out.value = best_value;
  return out;
}

}  // namespace

std::string to_string(SolverMethod method) {
  return method == SolverMethod::grid_oracle ? "grid_oracle" : "simplex_subgradient";
}

std::string to_string(Verdict verdict) {
  return verdict == Verdict::certified ? "certified" : "inconclusive";
}

SolverMethod parse_solver_method(const std::string& text) {
  if (text == "simplex_subgradient") return SolverMethod::simplex_subgradient;
  if (text == "grid_oracle") return SolverMethod::grid_oracle;
  throw ValidationError("method", "expected 'simplex_subgradient' or 'grid_oracle'");
}

FavardProblem assemble_problem(const CocycleSystem& sys, const Vector& u0, NearReturnSet returns,
                               double blowup_factor) {
  if (u0.size() != sys.state_dim()) throw ValidationError("u0", "seed has wrong dimension");
  const StateNorm norm = sys.norm();
  const double threshold = blowup_factor * (1.0 + norm(u0));
  const double sup = trajectory_sup(sys, u0, returns.horizon, threshold);
  if (!(sup <= threshold)) {
    throw BlowUpError("seed trajectory exceeds " + format_double(threshold) + " on [0, " +
                      format_double(returns.horizon) + "]; no bounded solution through the seed");
  }
  if (returns.empty()) throw PreconditionError("no near-returns within delta_cap on the scanned horizon");
  FavardProblem problem;
  problem.anchor = u0;
  problem.norm = norm;
  for (const auto& r : returns.returns) {
    Vector point = r.apply(u0);
    if (!point.allFinite()) throw OverflowError("hull point at tau=" + format_double(r.tau) + " is not finite");
    problem.hull_points.push_back(std::move(point));
  }
  problem.returns = std::move(returns);
  return problem;
}

double favard_functional(const FavardProblem& problem, const Vector& u) {
  double worst = 0.0;
  for (const auto& r : problem.returns.returns) {
    worst = std::max(worst, problem.norm.distance(r.apply(u), problem.anchor));
  }
  return worst;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::max(v[i] - theta, 0.0);
    sum += out[i];
  }
  if (sum > 0.0) {
    for (double& x : out) x /= sum;
  } else if (!out.empty()) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  }
  return out;
}

std::vector<double> nearest_hull_weights(std::span<const Vector> points, const Vector& target) {
  const std::size_t K = points.size();
  if (K == 0) throw PreconditionError("nearest_hull_weights: no points");
  std::vector<Vector> q(K);
  double scale = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    q[k] = points[k] - target;
    scale = std::max(scale, q[k].squaredNorm());
  }
  const double tol = 1e-12;

  std::size_t start = 0;
  for (std::size_t k = 1; k < K; ++k) {
    if (q[k].squaredNorm() < q[start].squaredNorm()) start = k;
  }
  std::vector<std::size_t> S{start};
  std::vector<double> w{1.0};
  Vector x = q[start];

  auto point_of = [&](const std::vector<double>& weights) {
    Vector y = Vector::Zero(target.size());
    for (std::size_t i = 0; i < S.size(); ++i) y += weights[i] * q[S[i]];
    return y;
  };
  // Minimizer of |sum a_i q_i| over the affine hull of S (sum a_i = 1).
  auto affine_min = [&]() {
    const auto m = static_cast<Eigen::Index>(S.size());
    Matrix kkt = Matrix::Zero(m + 1, m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) kkt(i, j) = q[S[static_cast<std::size_t>(i)]].dot(q[S[static_cast<std::size_t>(j)]]);
      kkt(i, m) = 1.0;
      kkt(m, i) = 1.0;
    }
    Vector rhs = Vector::Zero(m + 1);
    rhs[m] = 1.0;
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    return std::vector<double>(sol.data(), sol.data() + m);
  };

  for (int major = 0; major < 1000; ++major) {
    std::size_t j = 0;
    double best = kInf;
    for (std::size_t k = 0; k < K; ++k) {
      const double d = x.dot(q[k]);
      if (d < best) {
        best = d;
        j = k;
      }
    }
    if (best >= x.squaredNorm() - tol * scale) break;
    if (std::find(S.begin(), S.end(), j) != S.end()) break;
    S.push_back(j);
    w.push_back(0.0);
    for (int minor = 0; minor < 1000; ++minor) {
      const std::vector<double> alpha = affine_min();
      if (std::all_of(alpha.begin(), alpha.end(), [&](double a) { return a > tol; })) {
        w = alpha;
        x = point_of(w);
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < S.size(); ++i) {
        if (alpha[i] <= tol && w[i] - alpha[i] > 0.0) theta = std::min(theta, w[i] / (w[i] - alpha[i]));
      }
      for (std::size_t i = 0; i < S.size(); ++i) w[i] = (1.0 - theta) * w[i] + theta * alpha[i];
      std::size_t drop = 0;
      for (std::size_t i = 1; i < S.size(); ++i) {
        if (w[i] < w[drop]) drop = i;
      }
      std::vector<std::size_t> keepS;
      std::vector<double> keepW;
      for (std::size_t i = 0; i < S.size(); ++i) {
        if (w[i] > tol && i != drop) {
          keepS.push_back(S[i]);
          keepW.push_back(w[i]);
        }
      }
      S = std::move(keepS);
      w = std::move(keepW);
      const double sum = std::accumulate(w.begin(), w.end(), 0.0);
      for (double& x_i : w) x_i /= sum;
      x = point_of(w);
      if (S.size() == 1) break;
    }
  }
  std::vector<double> out(K, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i) {
    out[S[i]] += std::max(w[i], 0.0);
    sum += std::max(w[i], 0.0);
  }
  for (double& x_i : out) x_i /= sum;
  return out;
}

std::vector<double> default_delta_grid(double delta_cap, int levels) {
  std::vector<double> grid;
  for (int j = 0; j < levels; ++j) grid.push_back(std::ldexp(delta_cap, -j));
  return grid;
}

double default_certification_tolerance(const CocycleSystem& sys) {
  if (sys.is_discrete()) return 1e-6;
  const double h = sys.step();
  return std::max(1e-6, 10.0 * h * h * h * h);
}

FixedPointCheck verify_fixed_point(const CocycleSystem& sys, const Vector& u_bar, const NearReturnSet& returns,
                                   std::span<const double> delta_grid, double tolerance) {
  if (returns.empty()) throw PreconditionError("verify_fixed_point: empty return set");
  const StateNorm norm = sys.norm();
  std::vector<double> levels(delta_grid.begin(), delta_grid.end());
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<double> residual(returns.returns.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(residual.size()); ++k) {
    const auto& r = returns.returns[static_cast<std::size_t>(k)];
    residual[static_cast<std::size_t>(k)] = norm.distance(r.apply(u_bar), u_bar);
  }

  FixedPointCheck check;
  for (double delta : levels) {
    ResidualPoint pt{delta, 0.0, 0};
    for (std::size_t k = 0; k < residual.size(); ++k) {
      if (returns.returns[k].delta <= delta) {
        pt.r = std::max(pt.r, residual[k]);
        ++pt.count;
      }
    }
    if (pt.count > 0) check.curve.push_back(pt);
  }

  if (check.curve.empty()) {
    check.reason = "no return qualifies at any level of the delta grid";
    return check;
  }
  for (std::size_t i = 1; i < check.curve.size(); ++i) {
    if (check.curve[i].r > 1.1 * check.curve[i - 1].r + tolerance) {
      check.reason = "residual increases as delta decreases";
      return check;
    }
  }
  const ResidualPoint& finest = check.curve.back();
  if (finest.r <= tolerance) {
    check.verdict = Verdict::certified;
    check.reason = "r(delta_min) = " + format_double(finest.r) + " <= " + format_double(tolerance);
    return check;
  }
  // Surrogate maps miss the true limit maps by the base displacement, which
  // is O(delta); a fixed point shows r(delta) = O(delta), anything else does not.
  const ResidualPoint& coarsest = check.curve.front();
  const bool enough_levels = check.curve.size() >= 3 && coarsest.delta >= 4.0 * finest.delta;
  double worst_slope = 0.0;
  for (const auto& pt : check.curve) worst_slope = std::max(worst_slope, (pt.r - tolerance) / pt.delta);
  const double base_slope = coarsest.r / coarsest.delta;
  if (enough_levels && worst_slope <= 2.0 * base_slope) {
    check.verdict = Verdict::certified;
    check.reason = "r(delta) vanishes at least linearly: max r/delta = " + format_double(worst_slope) +
                   " <= 2 * " + format_double(base_slope);
  } else if (!enough_levels) {
    check.reason = "r(delta_min) = " + format_double(finest.r) + " above tolerance and too few witnessed levels";
  } else {
    check.reason = "r(delta) does not shrink with delta: max r/delta = " + format_double(worst_slope) +
                   " > 2 * " + format_double(base_slope);
  }
  return check;
}

FavardResult solve_minmax(const FavardProblem& problem, SolverMethod method, const SolverOptions& options) {
  const std::size_t K = problem.hull_points.size();
  if (K == 0) throw PreconditionError("solve_minmax: no hull points");
  if (K != problem.returns.returns.size()) throw ValidationError("hull_points", "one hull point per return");
  for (const auto& r : problem.returns.returns) {
    if (!r.Phi.allFinite() || !r.b.allFinite()) throw ValidationError("returns", "return maps must be finite");
  }

  const StackedMaps maps(problem);
  const Matrix P = hull_matrix(problem);
  FavardResult result;
  result.trace.method = to_string(method);

  const Vector& p0 = problem.hull_points.front();
  double spread = 0.0;
  for (const auto& p : problem.hull_points) spread = std::max(spread, (p - p0).cwiseAbs().maxCoeff());
  const bool degenerate = spread <= 1e-12 * (1.0 + p0.cwiseAbs().maxCoeff());

  if (degenerate) {
    result.trace.degenerate_hull = true;
    result.trace.stop_reason = "degenerate_hull";
    result.notices.push_back("degenerate hull: all return points coincide; u_bar = p_1");
    result.weights.assign(K, 0.0);
    result.weights[0] = 1.0;
    result.u_bar = p0;
    result.trace.claimed_value = maps.value(p0, problem.norm).first;
    result.trace.initial_value = result.trace.claimed_value;
  } else {
    const AffineBasis basis = affine_basis(P);
    result.trace.hull_dimension = basis.dim;
    if (method == SolverMethod::grid_oracle) {
      const OracleResult oracle = grid_oracle(problem, maps, P, basis, options);
      result.weights = oracle.weights;
      result.u_bar = oracle.u;
      result.trace.claimed_value = oracle.value;
      result.trace.initial_value = oracle.value;
      result.trace.stop_reason = "grid_exhausted";
      result.trace.oracle_value = oracle.value;
      result.trace.oracle_tolerance = lipschitz_bound(problem) * oracle.spacing + 1e-9;
      result.trace.oracle_agrees = true;
    } else {
      // Start from the hull point nearest the anchor: among minimizers of a
      // flat objective this keeps the one closest to the seed orbit.
      const std::vector<double> start = nearest_hull_weights(problem.hull_points, problem.anchor);
      DescentResult descent = projected_subgradient(problem, maps, P, start, options);
      // No vertex may beat the reported minimizer.
      for (std::size_t k = 0; k < K; ++k) {
        const double v = maps.value(problem.hull_points[k], problem.norm).first;
        if (v < descent.value - 1e-12 * (1.0 + descent.value)) {
          descent.value = v;
          descent.weights.assign(K, 0.0);
          descent.weights[k] = 1.0;
          descent.stop_reason += "+vertex";
        }
      }
      result.weights = descent.weights;
      result.u_bar = combine(P, descent.weights);
      result.trace.iterations = descent.iterations;
      result.trace.stop_reason = descent.stop_reason;
      result.trace.initial_value = descent.initial;
      result.trace.claimed_value = descent.value;
      if (basis.dim <= 2) {
        const OracleResult oracle = grid_oracle(problem, maps, P, basis, options);
        const double tol = lipschitz_bound(problem) * oracle.spacing + 1e-9;
        result.trace.oracle_value = oracle.value;
        result.trace.oracle_tolerance = tol;
        result.trace.oracle_agrees = descent.value <= oracle.value + tol;
      }
    }
  }

  result.ell_value = favard_functional(problem, result.u_bar);
  if (std::abs(result.ell_value - result.trace.claimed_value) > 1e-9) {
    throw Error("optimizer claimed l = " + format_double(result.trace.claimed_value) +
                " but direct evaluation gives " + format_double(result.ell_value));
  }
  return result;
}

nlohmann::json to_json(const FavardResult& result) {
  using nlohmann::json;
  json curve = json::array();
  json counts = json::array();
  for (const auto& pt : result.residual_curve) {
    curve.push_back({pt.delta, pt.r});
    counts.push_back(pt.count);
  }
  json optimizer = {
      {"method", result.trace.method},
      {"iterations", result.trace.iterations},
      {"stop_reason", result.trace.stop_reason},
      {"initial_value", result.trace.initial_value},
      {"claimed_value", result.trace.claimed_value},
      {"hull_dimension", result.trace.hull_dimension},
      {"degenerate_hull", result.trace.degenerate_hull},
  };
  if (result.trace.oracle_value) {
    optimizer["oracle_value"] = *result.trace.oracle_value;
    optimizer["oracle_tolerance"] = *result.trace.oracle_tolerance;
    optimizer["oracle_agrees"] = result.trace.oracle_agrees;
  }
  return {
      {"u_bar", std::vector<double>(result.u_bar.data(), result.u_bar.data() + result.u_bar.size())},
      {"ell_value", result.ell_value},
      {"residual_curve", curve},
      {"residual_counts", counts},
      {"verdict", to_string(result.verdict)},
      {"verdict_reason", result.verdict_reason},
      {"optimizer", optimizer},
      {"notices", result.notices},
  };
}

}  // namespace favard
