#pragma once

#include <functional>
#include <span>
#include <vector>

#include "favard/norms.hpp"
#include "favard/quasi_periodic.hpp"

namespace favard {

/// Linear/affine cocycle generated by x' = A(sigma(t,y0))x + f(sigma(t,y0))
/// (continuous), u(t+1) = A(t)u(t) + f(t) (discrete), or the stacked form
/// of u(t+1) = A(t)u_t + f(t) (finite delay). Immutable after construction.
class CocycleSystem {
 public:
  CocycleSystem(QuasiPeriodicSpec spec, TorusPoint base_phase, double h = 1e-3);

  const QuasiPeriodicSpec& spec() const { return spec_; }
  const TorusPoint& base_phase() const { return base_phase_; }
  double step() const { return h_; }
  bool is_discrete() const { return spec_.is_discrete(); }
  int state_dim() const { return spec_.state_dim(); }
  StateNorm norm() const;

  /// The same equation over sigma(s, y0).
  CocycleSystem shifted(double s) const;

  CocycleSystem with_step(double h) const { return CocycleSystem(spec_, base_phase_, h); }

  /// Base-return quality of tau: sup_j angular distance of tau*omega_j to 0.
  double return_quality(double tau) const;

 private:
  QuasiPeriodicSpec spec_;
  TorusPoint base_phase_;
  double h_;
};

struct FundamentalMatrix {
  double t = 0.0;
  Matrix U;
};

/// psi(tau, u, y0) = Phi*u + b.
struct AffineMapSample {
  double tau = 0.0;
  Matrix Phi;
  Vector b;
  double delta = 0.0;  ///< base-return quality of tau

  Vector apply(const Vector& u) const { return Phi * u + b; }
};

/// History (u(t), u(t-1), ..., u(t-r)) of a delay equation.
struct DelayState {
  std::vector<Vector> history;

  Vector stacked() const;
  static DelayState from_stacked(const Vector& v, int n);
  /// sum_k |u(t-k)|
  double norm() const;
};

FundamentalMatrix fundamental_matrix(const CocycleSystem& sys, double t);

/// Direct evaluation of the affine cocycle: RK4 on the inhomogeneous
/// equation (continuous) or the exact recursion (discrete, delay).
Vector evaluate_affine(const CocycleSystem& sys, const Vector& u, double t);

/// psi(t, u, y0) for several nonnegative times, in one forward pass.
std::vector<Vector> evaluate_affine_at(const CocycleSystem& sys, const Vector& u,
                                       std::span<const double> times);

/// States psi(k*stride*step, u, y0) for k = 0..count-1, one forward pass.
/// In discrete time the step is 1.
std::vector<Vector> trajectory(const CocycleSystem& sys, const Vector& u, long stride, long count);

/// Streaming form of trajectory(): visit(k, state) for k = 0..count-1.
void visit_trajectory(const CocycleSystem& sys, const Vector& u, long stride, long count,
                      const std::function<void(long, const Vector&)>& visit);

/// sup of |psi(t, u, y0)| over the step grid of [0, horizon]; stops as
/// soon as the value exceeds abort_above.
double trajectory_sup(const CocycleSystem& sys, const Vector& u, double horizon, double abort_above);

AffineMapSample affine_map_sample(const CocycleSystem& sys, double tau);

/// Samples for many nonnegative times. The horizon is cut into fixed
/// segments integrated independently in parallel and composed through the
/// cocycle identity, so results do not depend on the worker count.
std::vector<AffineMapSample> affine_map_samples(const CocycleSystem& sys, std::span<const double> taus);

/// |psi(t+s, u, y0) - psi(t, psi(s, u, y0), sigma(s, y0))|
double verify_cocycle_identity(const CocycleSystem& sys, const Vector& u, double t, double s);

struct BoundEstimate {
  double L = 0.0;
  double horizon = 0.0;
};

/// max over samples and grid times of |U(t)u| / |u| on [0, horizon].
/// Throws BlowUpError once a trajectory exceeds threshold_factor*(1+|u|).
BoundEstimate estimate_bound_constant(const CocycleSystem& sys, std::span<const Vector> u_samples,
                                      double horizon, double threshold_factor = 1e8);

/// Composition of affine maps: (outer o inner)(u) = outer(inner(u)).
AffineMapSample compose_maps(const AffineMapSample& outer, const AffineMapSample& inner);

namespace reference {

/// Single sequential pass from 0 without segmentation.
std::vector<AffineMapSample> affine_map_samples(const CocycleSystem& sys, std::span<const double> taus);

}  // namespace reference

}  // namespace favard
