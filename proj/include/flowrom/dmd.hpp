#pragma once

// Discrete-time baselines fitted to projected trajectories: classical DMD,
// DMD with control, and DMD with quadratic term and control, plus the
// rollout used to rebuild trajectories from the fitted maps.

#include "flowrom/linalg.hpp"

namespace flowrom {

/// Discrete map x_{k+1} = A x_k + H (x_k (x) x_k) + B u_k with optional
/// (empty) input and quadratic blocks. H is compact.
struct DiscreteModel {
  Matrix A;
  Matrix B;
  Matrix H;

  Index order() const { return A.rows(); }

  Vector step(const Vector& x, const Vector& u) const {
    Vector next = A * x;
    if (H.size() != 0) next += apply_quadratic(H, x);
    if (B.size() != 0 && u.size() != 0) next += B * u;
    return next;
  }
};

// All fits reuse the truncated-SVD least squares; a negative tol means the
// default truncation 1e-10 * sigma_1 of the regressor matrix.
namespace detail {
inline Matrix dmd_solve(const Matrix& regressors, const Matrix& targets, double tol) {
  return tol < 0 ? min_norm_lstsq_rel(regressors, targets, 1e-10) : min_norm_lstsq(regressors, targets, tol);
}
}  // namespace detail

/// Classical DMD: A from the pairs x_k -> x_{k+1}.
inline DiscreteModel dmd(const Matrix& Xhat, double tol = -1.0) {
  if (Xhat.cols() < 2) throw std::invalid_argument("dmd: need at least two snapshots");
  const Index n = Xhat.cols() - 1;
  DiscreteModel model;
  model.A = detail::dmd_solve(Xhat.leftCols(n), Xhat.rightCols(n), tol);
  return model;
}

/// DMD with control: [A B] from [x_k; u_k] -> x_{k+1}.
inline DiscreteModel dmdc(const Matrix& Xhat, const Matrix& U, double tol = -1.0) {
  if (Xhat.cols() < 2) throw std::invalid_argument("dmdc: need at least two snapshots");
  if (U.cols() != Xhat.cols()) throw std::invalid_argument("dmdc: input column count mismatch");
  const Index n = Xhat.cols() - 1;
  const Index r = Xhat.rows(), m = U.rows();
  Matrix regressors(r + m, n);
  regressors.topRows(r) = Xhat.leftCols(n);
  regressors.bottomRows(m) = U.leftCols(n);
  const Matrix packed = detail::dmd_solve(regressors, Xhat.rightCols(n), tol);
  DiscreteModel model;
  model.A = packed.leftCols(r);
  model.B = packed.rightCols(m);
  return model;
}

/// DMD with quadratic term and control:
/// [A H B] from [x_k; compress(x_k (x) x_k); u_k] -> x_{k+1}.
inline DiscreteModel dmdquad(const Matrix& Xhat, const Matrix& U, double tol = -1.0) {
  if (Xhat.cols() < 2) throw std::invalid_argument("dmdquad: need at least two snapshots");
  if (U.cols() != Xhat.cols()) throw std::invalid_argument("dmdquad: input column count mismatch");
  const Index n = Xhat.cols() - 1;
  const Index r = Xhat.rows(), q = quad_feature_dim(r), m = U.rows();
  Matrix regressors(r + q + m, n);
  regressors.topRows(r) = Xhat.leftCols(n);
  regressors.middleRows(r, q) = quad_features_columns(Xhat.leftCols(n));
  regressors.bottomRows(m) = U.leftCols(n);
  const Matrix packed = detail::dmd_solve(regressors, Xhat.rightCols(n), tol);
  DiscreteModel model;
  model.A = packed.leftCols(r);
  model.H = packed.middleCols(r, q);
  model.B = packed.rightCols(m);
  return model;
}

/// Iterates the discrete map for `steps` steps (so the result has steps + 1
/// columns). When the model has an input block, U must supply at least
/// `steps` columns (column k drives the step k -> k+1).
inline Matrix rollout(const DiscreteModel& model, const Vector& x0, Index steps, const Matrix& U = Matrix()) {
  if (x0.size() != model.order()) throw std::invalid_argument("rollout: state dimension mismatch");
  if (model.B.size() != 0 && U.cols() < steps) throw std::invalid_argument("rollout: not enough input columns");
  Matrix X(x0.size(), steps + 1);
  X.col(0) = x0;
  Vector x = x0;
  const Vector no_input;
  for (Index k = 0; k < steps; ++k) {
    x = model.step(x, model.B.size() != 0 ? Vector(U.col(k)) : no_input);
    if (!x.allFinite()) throw std::runtime_error("rollout: non-finite state at step " + std::to_string(k + 1));
    X.col(k + 1) = x;
  }
  return X;
}

}  // namespace flowrom
