#include "favard/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "favard/errors.hpp"
#include "favard/io.hpp"

namespace favard {

namespace {

// Steps per independently integrated segment in affine_map_samples.
constexpr long kContinuousSegment = 1024;
constexpr long kDiscreteSegment = 256;

// One step of the (augmented) linear system on an N x c matrix. When
// `affine` is set the last column carries the inhomogeneous term.
class Stepper {
 public:
  explicit Stepper(const CocycleSystem& sys) : sys_(sys), n_(sys.spec().dimension), N_(sys.state_dim()) {
    G_.setZero(N_, N_);
    F_.setZero(N_);
  }

  void continuous_step(Matrix& M, double t0, double tm, double t1, bool affine) {
    const double dt = t1 - t0;
    load(t0);
    Matrix k1 = rhs(M, affine);
    load(tm);
    Matrix k2 = rhs(M + 0.5 * dt * k1, affine);
    Matrix k3 = rhs(M + 0.5 * dt * k2, affine);
    load(t1);
    Matrix k4 = rhs(M + dt * k3, affine);
    M += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // u(t+1) = G(t)u(t) + F(t) on every column; F only on the last when affine.
  void discrete_step(Matrix& M, double t, bool affine) {
    load(t);
    Matrix next = G_ * M;
    if (affine) next.col(next.cols() - 1) += F_;
    M.swap(next);
  }

  const Matrix& generator_at(double t) {
    load(t);
    return G_;
  }

 private:
  Matrix rhs(const Matrix& M, bool affine) const {
    Matrix out = G_ * M;
    if (affine) out.col(out.cols() - 1) += F_;
    return out;
  }

  void load(double t) {
    if (loaded_ && t == loaded_time_) return;
    eval_base_into(sys_.spec(), sys_.base_phase(), t, phase_, A_, f_);
    if (N_ == n_) {
      G_ = A_;
    } else {
      G_.setZero();
      G_.topRows(n_) = A_;
      G_.block(n_, 0, N_ - n_, N_ - n_).setIdentity();
    }
    F_.setZero();
    F_.head(n_) = f_;
    loaded_ = true;
    loaded_time_ = t;
  }

  const CocycleSystem& sys_;
  int n_;
  int N_;
  std::vector<double> phase_;
  Matrix A_;
  Vector f_;
  Matrix G_;
  Vector F_;
  bool loaded_ = false;
  double loaded_time_ = 0.0;
};

// Position of a nonnegative time on the step grid: `steps` whole steps
// followed by a partial step of length `rem` (continuous only).
struct GridPoint {
  long steps = 0;
  double rem = 0.0;
};

GridPoint locate(const CocycleSystem& sys, double tau) {
  if (!std::isfinite(tau) || tau < 0.0) throw ValidationError("tau", "must be finite and nonnegative");
  if (sys.is_discrete()) {
    if (tau != std::round(tau)) throw ValidationError("tau", "discrete-time systems need integer times");
    return {static_cast<long>(tau), 0.0};
  }
  const double h = sys.step();
  const double q = tau / h;
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-9 * std::max(1.0, q)) return {static_cast<long>(nearest), 0.0};
  const auto steps = static_cast<long>(std::floor(q));
  return {steps, tau - static_cast<double>(steps) * h};
}

// Advance M by whole steps [from, to) of the grid.
void march(Stepper& stepper, const CocycleSystem& sys, Matrix& M, long from, long to, bool affine) {
  if (sys.is_discrete()) {
    for (long k = from; k < to; ++k) stepper.discrete_step(M, static_cast<double>(k), affine);
    return;
  }
  const double h = sys.step();
  for (long k = from; k < to; ++k) {
    stepper.continuous_step(M, static_cast<double>(k) * h, (static_cast<double>(k) + 0.5) * h,
                            static_cast<double>(k + 1) * h, affine);
  }
}

void partial_step(Stepper& stepper, const CocycleSystem& sys, Matrix& M, long steps, double rem,
                  bool affine) {
  if (rem == 0.0) return;
  const double t0 = static_cast<double>(steps) * sys.step();
  const double t1 = t0 + rem;
  stepper.continuous_step(M, t0, 0.5 * (t0 + t1), t1, affine);
}

Matrix augmented_identity(int N) {
  Matrix M = Matrix::Zero(N, N + 1);
  M.leftCols(N).setIdentity();
  return M;
}

// (outer o inner) for augmented [Phi | b] matrices.
Matrix compose_augmented(const Matrix& outer, const Matrix& inner) {
  const auto N = outer.rows();
  Matrix out(N, N + 1);
  out.leftCols(N).noalias() = outer.leftCols(N) * inner.leftCols(N);
  out.col(N).noalias() = outer.leftCols(N) * inner.col(N);
  out.col(N) += outer.col(N);
  return out;
}

AffineMapSample to_sample(const CocycleSystem& sys, double tau, const Matrix& M) {
  const int N = sys.state_dim();
  if (!M.allFinite()) throw OverflowError("affine map at tau=" + format_double(tau) + " overflowed");
  AffineMapSample s;
  s.tau = tau;
  s.Phi = M.leftCols(N);
  s.b = M.col(N);
  s.delta = sys.return_quality(tau);
  return s;
}

std::vector<std::size_t> order_by_time(std::span<const double> times) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  return order;
}

}  // namespace

// ---------------------------------------------------------------------------

CocycleSystem::CocycleSystem(QuasiPeriodicSpec spec, TorusPoint base_phase, double h)
    : spec_(std::move(spec)), base_phase_(std::move(base_phase)), h_(h) {
  spec_.validate();
  if (static_cast<int>(base_phase_.size()) != spec_.torus_dim()) {
    throw ValidationError("base_phase", "must have one angle per frequency");
  }
  for (double& x : base_phase_) {
    if (!std::isfinite(x)) throw ValidationError("base_phase", "must be finite");
    x = wrap_angle(x);
  }
  if (spec_.is_discrete()) {
    h_ = 1.0;
  } else if (!(h_ > 0.0) || !std::isfinite(h_)) {
    throw ValidationError("h", "integrator step must be positive");
  }
}

StateNorm CocycleSystem::norm() const {
  if (spec_.delay_order > 0) return {NormKind::delay_sum, spec_.dimension};
  return {NormKind::euclidean, 0};
}

CocycleSystem CocycleSystem::shifted(double s) const {
  return CocycleSystem(spec_, advance_phase(base_phase_, spec_.frequencies, s), h_);
}

double CocycleSystem::return_quality(double tau) const {
  return favard::return_quality(spec_.frequencies, tau);
}

Vector DelayState::stacked() const {
  if (history.empty()) return {};
  const auto n = history.front().size();
  Vector out(n * static_cast<Eigen::Index>(history.size()));
  for (std::size_t k = 0; k < history.size(); ++k) {
    if (history[k].size() != n) throw ValidationError("history", "blocks must have equal dimension");
    out.segment(static_cast<Eigen::Index>(k) * n, n) = history[k];
  }
  return out;
}

DelayState DelayState::from_stacked(const Vector& v, int n) {
  if (n <= 0 || v.size() % n != 0) throw ValidationError("history", "stacked length is not a multiple of n");
  DelayState s;
  for (Eigen::Index start = 0; start < v.size(); start += n) s.history.push_back(v.segment(start, n));
  return s;
}

double DelayState::norm() const {
  double total = 0.0;
  for (const auto& h : history) total += h.norm();
  return total;
}

FundamentalMatrix fundamental_matrix(const CocycleSystem& sys, double t) {
  if (!std::isfinite(t)) throw ValidationError("t", "must be finite");
  const int N = sys.state_dim();
  if (t >= 0.0) {
    const double taus[] = {t};
    return {t, affine_map_samples(sys, taus).front().Phi};
  }
  Stepper stepper(sys);
  Matrix U = Matrix::Identity(N, N);
  if (sys.is_discrete()) {
    if (t != std::round(t)) throw ValidationError("t", "discrete-time systems need integer times");
    // U(-m) = G(-m)^{-1} ... G(-1)^{-1}
    for (long k = -1; k >= static_cast<long>(t); --k) {
      Eigen::FullPivLU<Matrix> lu(stepper.generator_at(static_cast<double>(k)));
      if (!lu.isInvertible()) {
        throw SingularStepError("step matrix at t=" + std::to_string(k) + " is not invertible");
      }
      U = lu.inverse() * U;
    }
    return {t, U};
  }
  const double h = sys.step();
  const auto steps = static_cast<long>(std::floor(-t / h + 1e-9));
  for (long k = 0; k < steps; ++k) {
    stepper.continuous_step(U, -static_cast<double>(k) * h, -(static_cast<double>(k) + 0.5) * h,
                            -static_cast<double>(k + 1) * h, false);
  }
  const double t_last = -static_cast<double>(steps) * h;
  if (t_last != t) stepper.continuous_step(U, t_last, 0.5 * (t_last + t), t, false);
  return {t, U};
}

Vector evaluate_affine(const CocycleSystem& sys, const Vector& u, double t) {
  const double times[] = {t};
  return evaluate_affine_at(sys, u, times).front();
}

std::vector<Vector> evaluate_affine_at(const CocycleSystem& sys, const Vector& u,
                                       std::span<const double> times) {
  if (u.size() != sys.state_dim()) throw ValidationError("u", "state has wrong dimension");
  std::vector<Vector> out(times.size());
  Stepper stepper(sys);
  Matrix x = u;
  long done = 0;
  for (std::size_t idx : order_by_time(times)) {
    const GridPoint gp = locate(sys, times[idx]);
    march(stepper, sys, x, done, gp.steps, true);
    done = gp.steps;
    if (!x.allFinite()) throw OverflowError("trajectory overflowed before t=" + format_double(times[idx]));
    if (gp.rem == 0.0) {
      out[idx] = x.col(0);
    } else {
      Matrix y = x;
      partial_step(stepper, sys, y, gp.steps, gp.rem, true);
      out[idx] = y.col(0);
    }
  }
  return out;
}

void visit_trajectory(const CocycleSystem& sys, const Vector& u, long stride, long count,
                      const std::function<void(long, const Vector&)>& visit) {
  if (u.size() != sys.state_dim()) throw ValidationError("u", "state has wrong dimension");
  if (stride < 1 || count < 0) throw ValidationError("stride", "must be positive");
  Stepper stepper(sys);
  Matrix x = u;
  Vector state;
  for (long k = 0; k < count; ++k) {
    if (k > 0) march(stepper, sys, x, (k - 1) * stride, k * stride, true);
    if (!x.allFinite()) throw OverflowError("trajectory overflowed");
    state = x.col(0);
    visit(k, state);
  }
}

std::vector<Vector> trajectory(const CocycleSystem& sys, const Vector& u, long stride, long count) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0L)));
  visit_trajectory(sys, u, stride, count, [&](long, const Vector& x) { out.push_back(x); });
  return out;
}

double trajectory_sup(const CocycleSystem& sys, const Vector& u, double horizon, double abort_above) {
  if (u.size() != sys.state_dim()) throw ValidationError("u", "state has wrong dimension");
  const GridPoint end = locate(sys, horizon);
  const StateNorm norm = sys.norm();
  Stepper stepper(sys);
  Matrix x = u;
  double sup = norm(u);
  for (long k = 0; k < end.steps && sup <= abort_above; ++k) {
    march(stepper, sys, x, k, k + 1, true);
    const double len = norm(Vector(x.col(0)));
    sup = std::isfinite(len) ? std::max(sup, len) : std::numeric_limits<double>::infinity();
  }
  if (end.rem > 0.0 && sup <= abort_above) {
    partial_step(stepper, sys, x, end.steps, end.rem, true);
    const double len = norm(Vector(x.col(0)));
    sup = std::isfinite(len) ? std::max(sup, len) : std::numeric_limits<double>::infinity();
  }
  return sup;
}

AffineMapSample affine_map_sample(const CocycleSystem& sys, double tau) {
  const double taus[] = {tau};
  return affine_map_samples(sys, taus).front();
}

std::vector<AffineMapSample> affine_map_samples(const CocycleSystem& sys, std::span<const double> taus) {
  const int N = sys.state_dim();
  const long seg_len = sys.is_discrete() ? kDiscreteSegment : kContinuousSegment;
  std::vector<GridPoint> points(taus.size());
  long last_segment = -1;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    points[i] = locate(sys, taus[i]);
    last_segment = std::max(last_segment, points[i].steps / seg_len);
  }
  if (taus.empty()) return {};

  const auto segments = static_cast<std::size_t>(last_segment + 1);
  std::vector<std::vector<std::size_t>> by_segment(segments);
  for (std::size_t i : order_by_time(taus)) {
    by_segment[static_cast<std::size_t>(points[i].steps / seg_len)].push_back(i);
  }

  // Segment maps (full) and local maps for each request, from identity.
  std::vector<Matrix> full(segments);
  std::vector<Matrix> local(taus.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t sidx = 0; sidx < static_cast<std::ptrdiff_t>(segments); ++sidx) {
    const auto seg = static_cast<std::size_t>(sidx);
    const long start = static_cast<long>(seg) * seg_len;
    Stepper stepper(sys);
    Matrix M = augmented_identity(N);
    long done = start;
    for (std::size_t i : by_segment[seg]) {
      march(stepper, sys, M, done, points[i].steps, true);
      done = points[i].steps;
      local[i] = M;
      partial_step(stepper, sys, local[i], points[i].steps, points[i].rem, true);
    }
    if (seg + 1 < segments) {
      march(stepper, sys, M, done, start + seg_len, true);
      full[seg] = std::move(M);
    }
  }

  std::vector<Matrix> prefix(segments);
  prefix[0] = augmented_identity(N);
  for (std::size_t s = 1; s < segments; ++s) prefix[s] = compose_augmented(full[s - 1], prefix[s - 1]);

  std::vector<AffineMapSample> out(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const auto seg = static_cast<std::size_t>(points[i].steps / seg_len);
    out[i] = to_sample(sys, taus[i], compose_augmented(local[i], prefix[seg]));
  }
  return out;
}

namespace reference {

std::vector<AffineMapSample> affine_map_samples(const CocycleSystem& sys, std::span<const double> taus) {
  const int N = sys.state_dim();
  std::vector<AffineMapSample> out(taus.size());
  Stepper stepper(sys);
  Matrix M = augmented_identity(N);
  long done = 0;
  for (std::size_t i : order_by_time(taus)) {
    const GridPoint gp = locate(sys, taus[i]);
    march(stepper, sys, M, done, gp.steps, true);
    done = gp.steps;
    Matrix at = M;
    partial_step(stepper, sys, at, gp.steps, gp.rem, true);
    out[i] = to_sample(sys, taus[i], at);
  }
  return out;
}

}  // namespace reference

double verify_cocycle_identity(const CocycleSystem& sys, const Vector& u, double t, double s) {
  if (t < 0.0 || s < 0.0) throw ValidationError("t", "cocycle identity is checked for t, s >= 0");
  const Vector direct = evaluate_affine(sys, u, t + s);
  const Vector mid = evaluate_affine(sys, u, s);
  const Vector chained = evaluate_affine(sys.shifted(s), mid, t);
  return sys.norm().distance(direct, chained);
}

BoundEstimate estimate_bound_constant(const CocycleSystem& sys, std::span<const Vector> u_samples,
                                      double horizon, double threshold_factor) {
  if (!(horizon > 0.0)) throw ValidationError("horizon", "must be positive");
  const StateNorm norm = sys.norm();
  const GridPoint end = locate(sys, horizon);
  for (const auto& u : u_samples) {
    if (u.size() != sys.state_dim()) throw ValidationError("u_samples", "state has wrong dimension");
    if (norm(u) == 0.0) throw ValidationError("u_samples", "samples must be nonzero");
  }
  std::vector<double> ratios(u_samples.size(), 0.0);
  std::vector<int> blew_up(u_samples.size(), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(u_samples.size()); ++i) {
    const Vector& u = u_samples[static_cast<std::size_t>(i)];
    const double u_norm = norm(u);
    const double threshold = threshold_factor * (1.0 + u_norm);
    Stepper stepper(sys);
    Matrix x = u;
    double worst = 1.0;
    for (long k = 0; k < end.steps + (end.rem > 0.0 ? 1 : 0); ++k) {
      if (k < end.steps) {
        march(stepper, sys, x, k, k + 1, false);
      } else {
        partial_step(stepper, sys, x, end.steps, end.rem, false);
      }
      const double len = norm(Vector(x.col(0)));
      if (!(len <= threshold)) {
        blew_up[static_cast<std::size_t>(i)] = 1;
        break;
      }
      worst = std::max(worst, len / u_norm);
    }
    ratios[static_cast<std::size_t>(i)] = worst;
  }
  BoundEstimate est{0.0, horizon};
  for (std::size_t i = 0; i < u_samples.size(); ++i) {
    if (blew_up[i]) {
      throw BlowUpError("trajectory from sample " + std::to_string(i) + " left the bound " +
                        format_double(threshold_factor) + "*(1+|u|) before t=" + format_double(horizon));
    }
    est.L = std::max(est.L, ratios[i]);
  }
  return est;
}

AffineMapSample compose_maps(const AffineMapSample& outer, const AffineMapSample& inner) {
  AffineMapSample out;
  out.tau = outer.tau + inner.tau;
  out.Phi = outer.Phi * inner.Phi;
  out.b = outer.Phi * inner.b + outer.b;
  out.delta = 0.0;
  return out;
}

}  // namespace favard
