#pragma once

// Time integration: IMEX Euler for the full DAE (implicit linear part and
// constraint, explicit quadratic term), classical RK4 for reduced ODEs,
// steady Stokes initialization, and 4th-order finite-difference estimation
// of trajectory derivatives.

#include "flowrom/leray.hpp"
#include "flowrom/model.hpp"

#include <functional>
#include <iostream>

namespace flowrom {

struct TimeGrid {
  double t0 = 0.0;
  double t_end = 1.0;
  Index steps = 1;

  TimeGrid() = default;
  TimeGrid(double t0_, double t_end_, Index steps_) : t0(t0_), t_end(t_end_), steps(steps_) {
    if (steps < 1 || !(t_end > t0)) throw std::invalid_argument("TimeGrid: need steps >= 1 and t_end > t0");
  }

  double dt() const { return (t_end - t0) / static_cast<double>(steps); }
  double time(Index k) const { return t0 + dt() * static_cast<double>(k); }

  Vector times() const {
    Vector t(steps + 1);
    for (Index k = 0; k <= steps; ++k) t(k) = time(k);
    return t;
  }
};

using InputSampler = std::function<Vector(double)>;
using ScalarSampler = std::function<double(double)>;

inline InputSampler zero_input(Index m) {
  return [m](double) { return Vector::Zero(m); };
}
inline ScalarSampler zero_scalar() {
  return [](double) { return 0.0; };
}

/// 4th-order finite differences of a uniformly sampled trajectory
/// (r x (N+1) -> r x (N+1)): five-point central stencils in the interior,
/// one-sided five-point stencils at the two boundary samples on each end.
/// Exact on polynomials up to degree 4.
inline Matrix estimate_derivatives(const Matrix& X, double dt) {
  const Index n = X.cols();
  if (n < 5) throw std::invalid_argument("estimate_derivatives: need at least 5 samples");
  if (!(dt > 0)) throw std::invalid_argument("estimate_derivatives: dt must be positive");
  const double h12 = 1.0 / (12.0 * dt);
  Matrix D(X.rows(), n);
  D.col(0) = (-25.0 * X.col(0) + 48.0 * X.col(1) - 36.0 * X.col(2) + 16.0 * X.col(3) - 3.0 * X.col(4)) * h12;
  D.col(1) = (-3.0 * X.col(0) - 10.0 * X.col(1) + 18.0 * X.col(2) - 6.0 * X.col(3) + X.col(4)) * h12;
  for (Index k = 2; k < n - 2; ++k) {
    D.col(k) = (X.col(k - 2) - 8.0 * X.col(k - 1) + 8.0 * X.col(k + 1) - X.col(k + 2)) * h12;
  }
  D.col(n - 2) =
      (3.0 * X.col(n - 1) + 10.0 * X.col(n - 2) - 18.0 * X.col(n - 3) + 6.0 * X.col(n - 4) - X.col(n - 5)) * h12;
  D.col(n - 1) =
      (25.0 * X.col(n - 1) - 48.0 * X.col(n - 2) + 36.0 * X.col(n - 3) - 16.0 * X.col(n - 4) + 3.0 * X.col(n - 5)) *
      h12;
  return D;
}

/// IMEX Euler for the DAE: each step solves the saddle system
///
///   [ E11 - dt A11   -dt A12 ] [ v_{k+1} ]   [ E11 v_k + dt (H(v_k (x) v_k) + B1 u_{k+1}) ]
///   [ A12^T            0     ] [ p_{k+1} ] = [ -Bperp uperp(t_{k+1})                      ]
///
/// with the saddle matrix factorized once. The input is sampled at t_{k+1}
/// consistently with the implicit treatment of the linear terms. Returns
/// velocity, pressure and input trajectories on the grid; the pressure at
/// t_0 is filled by the pressure Poisson evaluation at the initial state
/// (the stepping scheme itself only produces pressures at t >= t_1).
inline SnapshotSet imex_euler_dae(const QuadDaeModel& model, const Vector& v0, const InputSampler& u_of_t,
                                  const ScalarSampler& uperp_of_t, const TimeGrid& grid) {
  require_valid(model);
  const Index nv = model.n_v(), np = model.n_p(), m = model.n_inputs();
  if (v0.size() != nv) throw std::invalid_argument("imex_euler_dae: v0 has wrong length");
  const double dt = grid.dt();
  const Index N = grid.steps;

  SnapshotSet snaps;
  snaps.times = grid.times();
  snaps.V.resize(nv, N + 1);
  snaps.P.resize(np, N + 1);
  snaps.U.resize(m, N + 1);
  snaps.Uperp.resize(1, N + 1);
  for (Index k = 0; k <= N; ++k) {
    snaps.U.col(k) = u_of_t(grid.time(k));
    snaps.Uperp(0, k) = uperp_of_t(grid.time(k));
  }

  {  // initial consistency diagnostic
    Vector res = model.A12.transpose() * v0;
    if (model.has_constraint_forcing()) res += model.Bperp.col(0) * snaps.Uperp(0, 0);
    if (np > 0 && res.norm() > 1e-8 * std::max(1.0, v0.norm())) {
      std::cerr << "[flowrom] warning: initial state violates the constraint by " << res.norm() << "\n";
    }
  }

  Matrix saddle = Matrix::Zero(nv + np, nv + np);
  saddle.topLeftCorner(nv, nv) = model.E11 - dt * model.A11;
  if (np > 0) {
    saddle.topRightCorner(nv, np) = -dt * model.A12;
    saddle.bottomLeftCorner(np, nv) = model.A12.transpose();
  }
  Eigen::FullPivLU<Matrix> lu(saddle);
  if (!lu.isInvertible()) throw std::runtime_error("imex_euler_dae: singular saddle matrix");

  snaps.V.col(0) = v0;
  LerayProjector proj(model);
  {
    double udot0 = 0.0;
    if (model.has_constraint_forcing() && N >= 4) {
      udot0 = estimate_derivatives(snaps.Uperp, dt)(0, 0);
    }
    snaps.P.col(0) = pressure_from_velocity(model, proj, v0, snaps.U.col(0), udot0);
  }

  Vector rhs(nv + np), vk = v0;
  for (Index k = 0; k < N; ++k) {
    rhs.head(nv) = model.E11 * vk + dt * apply_quadratic(model.H, vk);
    if (m > 0) rhs.head(nv) += dt * (model.B1 * snaps.U.col(k + 1));
    if (np > 0) {
      rhs.tail(np).setZero();
      if (model.has_constraint_forcing()) rhs.tail(np) = -model.Bperp.col(0) * snaps.Uperp(0, k + 1);
    }
    const Vector sol = lu.solve(rhs);
    vk = sol.head(nv);
    if (!vk.allFinite()) {
      throw std::runtime_error("imex_euler_dae: non-finite state at step " + std::to_string(k + 1));
    }
    snaps.V.col(k + 1) = vk;
    if (np > 0) snaps.P.col(k + 1) = sol.tail(np);
  }
  return snaps;
}

/// Classical 4th-order Runge-Kutta with fixed steps. `rhs(x, t)` must return
/// a vector of the same length as x. Returns the full trajectory r x (N+1).
template <typename Rhs>
inline Matrix integrate_ode(Rhs&& rhs, const Vector& x0, const TimeGrid& grid) {
  const double dt = grid.dt();
  Matrix X(x0.size(), grid.steps + 1);
  X.col(0) = x0;
  Vector x = x0;
  for (Index k = 0; k < grid.steps; ++k) {
    const double t = grid.time(k);
    const Vector k1 = rhs(x, t);
    const Vector k2 = rhs((x + 0.5 * dt * k1).eval(), t + 0.5 * dt);
    const Vector k3 = rhs((x + 0.5 * dt * k2).eval(), t + 0.5 * dt);
    const Vector k4 = rhs((x + dt * k3).eval(), t + dt);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw std::runtime_error("integrate_ode: non-finite state at step " + std::to_string(k + 1));
    X.col(k + 1) = x;
  }
  return X;
}

/// IMEX Euler rollout of a reduced model with the same splitting as
/// imex_euler_dae: linear terms (A and the bilinear N uperp) implicit,
/// quadratic term explicit, inputs sampled at t_{k+1}. Surrogates rolled out
/// this way are directly comparable with the training trajectories; at full
/// order an exact Galerkin reduction reproduces them to round-off.
inline Matrix imex_euler_reduced(const ReducedQuadModel& rom, const Vector& x0, const InputSampler& u_of_t,
                                 const ScalarSampler& uperp_of_t, const TimeGrid& grid) {
  const Index r = rom.order();
  if (x0.size() != r) throw std::invalid_argument("imex_euler_reduced: x0 has wrong length");
  const double dt = grid.dt();
  Matrix X(r, grid.steps + 1);
  X.col(0) = x0;
  Vector x = x0;
  for (Index k = 0; k < grid.steps; ++k) {
    const double t_next = grid.time(k + 1);
    const double uperp = uperp_of_t(t_next);
    Matrix lhs = Matrix::Identity(r, r) - dt * rom.A;
    if (rom.N.size() != 0) lhs -= (dt * uperp) * rom.N;
    Vector rhs = x;
    if (rom.H.size() != 0) rhs += dt * apply_quadratic(rom.H, x);
    const Vector u = u_of_t(t_next);
    if (rom.B.size() != 0 && u.size() != 0) rhs += dt * (rom.B * u);
    if (rom.c.size() != 0) rhs += dt * rom.c.col(0);
    x = Eigen::PartialPivLU<Matrix>(lhs).solve(rhs);
    if (!x.allFinite()) {
      throw std::runtime_error("imex_euler_reduced: non-finite state at step " + std::to_string(k + 1));
    }
    X.col(k + 1) = x;
  }
  return X;
}

/// Steady Stokes problem (quadratic term dropped):
///
///   A11 v + A12 p + B1 u0 = 0,   A12^T v + Bperp uperp0 = 0.
inline std::pair<Vector, Vector> stokes_steady(const QuadDaeModel& model, const Vector& u0, double uperp0 = 0.0) {
  const Index nv = model.n_v(), np = model.n_p();
  if (u0.size() != model.n_inputs()) throw std::invalid_argument("stokes_steady: u0 has wrong length");
  Matrix saddle = Matrix::Zero(nv + np, nv + np);
  saddle.topLeftCorner(nv, nv) = model.A11;
  if (np > 0) {
    saddle.topRightCorner(nv, np) = model.A12;
    saddle.bottomLeftCorner(np, nv) = model.A12.transpose();
  }
  Vector rhs = Vector::Zero(nv + np);
  if (u0.size() > 0) rhs.head(nv) = -(model.B1 * u0);
  if (np > 0 && model.has_constraint_forcing()) rhs.tail(np) = -model.Bperp.col(0) * uperp0;
  Eigen::FullPivLU<Matrix> lu(saddle);
  if (!lu.isInvertible()) throw std::runtime_error("stokes_steady: singular saddle matrix");
  const Vector sol = lu.solve(rhs);
  return {sol.head(nv), sol.tail(np)};
}

}  // namespace flowrom
