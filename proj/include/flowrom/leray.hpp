#pragma once

// Structure exploitation of the incompressibility constraint: the discrete
// Leray projector, pressure recovery from velocity, the equivalent velocity
// ODE, the v_top / v_perp decomposition for inhomogeneous constraints, the
// corrected operators of the v_top equation, and the empirical
// divergence-free projector built from pressure-gradient snapshots.

#include "flowrom/model.hpp"

namespace flowrom {

/// Pi = I - E11^{-1} A12 S^{-1} A12^T with S = A12^T E11^{-1} A12, applied
/// matrix-free through the stored factorizations (Pi and Pi^T are never
/// formed densely; A11 Pi^T would also destroy sparsity at scale).
///
/// Pi is idempotent, annihilates the constraint (A12^T Pi x = 0), and its
/// transpose annihilates the pressure-gradient range (Pi^T A12 = 0).
class LerayProjector {
 public:
  explicit LerayProjector(const QuadDaeModel& model)
      : a12_(model.A12), e11_llt_(model.E11) {
    if (e11_llt_.info() != Eigen::Success) {
      throw std::invalid_argument("LerayProjector: E11 is not SPD");
    }
    if (a12_.cols() > 0) {
      const Matrix S = a12_.transpose() * e11_llt_.solve(a12_);
      s_llt_.compute(0.5 * (S + S.transpose()));
      if (s_llt_.info() != Eigen::Success) {
        throw std::invalid_argument("LerayProjector: S = A12^T E11^{-1} A12 is singular");
      }
    }
  }

  Index n_v() const { return a12_.rows(); }
  Index n_p() const { return a12_.cols(); }

  /// Pi x
  Vector apply(const Vector& x) const {
    if (x.size() != n_v()) throw std::invalid_argument("LerayProjector::apply: wrong length");
    if (n_p() == 0) return x;
    return x - e11_llt_.solve(a12_ * s_llt_.solve(a12_.transpose() * x));
  }

  /// Pi^T x = x - A12 S^{-1} A12^T E11^{-1} x
  Vector apply_transpose(const Vector& x) const {
    if (x.size() != n_v()) throw std::invalid_argument("LerayProjector::apply_transpose: wrong length");
    if (n_p() == 0) return x;
    return x - a12_ * s_llt_.solve(a12_.transpose() * e11_llt_.solve(x));
  }

  Vector solve_e11(const Vector& x) const { return e11_llt_.solve(x); }
  Matrix solve_e11(const Matrix& x) const { return e11_llt_.solve(x); }
  Vector solve_s(const Vector& x) const { return s_llt_.solve(x); }
  const Matrix& a12() const { return a12_; }

 private:
  Matrix a12_;
  Eigen::LLT<Matrix> e11_llt_;
  Eigen::LLT<Matrix> s_llt_;
};

inline LerayProjector build_leray(const QuadDaeModel& model) { return LerayProjector(model); }

inline Vector apply_leray(const LerayProjector& proj, const Vector& x) { return proj.apply(x); }
inline Vector apply_leray_t(const LerayProjector& proj, const Vector& x) { return proj.apply_transpose(x); }

/// Pressure recovered from velocity through the pressure Poisson equation:
///
///   p = -S^{-1} A12^T E11^{-1} (A11 v + H(v(x)v) + B1 u) - S^{-1} Bperp uperp'
///
/// The last term appears only for inhomogeneous constraints; it comes from
/// differentiating A12^T v + Bperp uperp = 0 in time.
inline Vector pressure_from_velocity(const QuadDaeModel& model, const LerayProjector& proj, const Vector& v,
                                     const Vector& u, double udot_perp = 0.0) {
  if (model.n_p() == 0) return Vector(0);
  Vector w = model.A11 * v + apply_quadratic(model.H, v);
  if (u.size() > 0) w += model.B1 * u;
  Vector p = -proj.solve_s(model.A12.transpose() * proj.solve_e11(w));
  if (model.has_constraint_forcing()) p -= proj.solve_s(model.Bperp.col(0) * udot_perp);
  return p;
}

inline Vector pressure_from_velocity(const QuadDaeModel& model, const Vector& v, const Vector& u,
                                     double udot_perp = 0.0) {
  return pressure_from_velocity(model, LerayProjector(model), v, u, udot_perp);
}

/// Right-hand side of the underlying velocity ODE,
///
///   E11 v' = Pi^T (A11 v + H(v(x)v) + B1 u) - A12 S^{-1} Bperp uperp',
///
/// returned after the E11 solve. Along constraint-satisfying states this is
/// exactly the DAE dynamics with the pressure eliminated.
inline Vector ode_rhs(const QuadDaeModel& model, const LerayProjector& proj, const Vector& v, const Vector& u,
                      double udot_perp = 0.0) {
  Vector w = model.A11 * v + apply_quadratic(model.H, v);
  if (u.size() > 0) w += model.B1 * u;
  Vector z = proj.apply_transpose(w);
  if (model.has_constraint_forcing() && model.n_p() > 0) {
    z -= model.A12 * proj.solve_s(model.Bperp.col(0) * udot_perp);
  }
  return proj.solve_e11(z);
}

inline Vector ode_rhs(const QuadDaeModel& model, const Vector& v, const Vector& u, double udot_perp = 0.0) {
  return ode_rhs(model, LerayProjector(model), v, u, udot_perp);
}

/// Splits v into the divergence-free part v_top = Pi v and the constraint-
/// carrying remainder v_perp = -E11^{-1} A12 S^{-1} Bperp uperp. For states
/// on the constraint manifold, v_top + v_perp = v.
inline std::pair<Vector, Vector> decompose_velocity(const QuadDaeModel& model, const LerayProjector& proj,
                                                    const Vector& v, double uperp) {
  Vector v_top = proj.apply(v);
  Vector v_perp = Vector::Zero(model.n_v());
  if (model.has_constraint_forcing() && model.n_p() > 0) {
    v_perp = -proj.solve_e11(model.A12 * proj.solve_s(model.Bperp.col(0) * uperp));
  }
  return {std::move(v_top), std::move(v_perp)};
}

inline std::pair<Vector, Vector> decompose_velocity(const QuadDaeModel& model, const Vector& v, double uperp) {
  return decompose_velocity(model, LerayProjector(model), v, uperp);
}

/// Direction of the constraint-carrying velocity: v_perp(t) = s_perp * uperp(t).
inline Vector constraint_direction(const QuadDaeModel& model, const LerayProjector& proj) {
  if (!model.has_constraint_forcing()) {
    throw std::invalid_argument("constraint_direction: model has no Bperp");
  }
  return -proj.solve_e11(model.A12 * proj.solve_s(model.Bperp.col(0)));
}

/// Operators of the v_top equation for inhomogeneous constraints:
///
///   E11 v_top' = A11 v_top + H(v_top (x) v_top) + N v_top uperp
///                + c2 uperp^2 + A12 p + B1 u
///
/// with N = H (I (x) s_perp + s_perp (x) I) and c2 = H (s_perp (x) s_perp).
/// A11 and H are unchanged.
struct CorrectedOperators {
  Vector s_perp;  // v_perp = s_perp * uperp
  Matrix N;       // n_v x n_v
  Vector c2;      // n_v
};

inline CorrectedOperators corrected_operators(const QuadDaeModel& model, const LerayProjector& proj) {
  CorrectedOperators out;
  out.s_perp = constraint_direction(model, proj);
  const Index n = model.n_v();
  out.N.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    out.N.col(j) = apply_quadratic_pair(model.H, Vector::Unit(n, j), out.s_perp);
  }
  out.c2 = apply_quadratic(model.H, out.s_perp);
  return out;
}

inline CorrectedOperators corrected_operators(const QuadDaeModel& model) {
  return corrected_operators(model, LerayProjector(model));
}

/// Projector onto the orthogonal complement of the span of pressure-gradient
/// snapshots: Pi~ = I - Q Q^T with Q an orthonormal basis of the snapshot
/// range. Use when the exact Leray projector is unavailable.
struct EmpiricalProjector {
  Matrix Q;  // n_v x rank, orthonormal columns (empty for all-zero snapshots)

  Vector apply(const Vector& x) const { return Q.size() == 0 ? x : (x - Q * (Q.transpose() * x)).eval(); }
  Matrix apply(const Matrix& x) const { return Q.size() == 0 ? x : (x - Q * (Q.transpose() * x)).eval(); }
};

inline EmpiricalProjector empirical_divfree_projector(const Matrix& pressure_gradient_snapshots) {
  if (!pressure_gradient_snapshots.allFinite()) {
    throw std::invalid_argument("empirical_divfree_projector: non-finite snapshots");
  }
  EmpiricalProjector out;
  const double nrm = pressure_gradient_snapshots.norm();
  if (nrm == 0.0) {
    out.Q = Matrix(pressure_gradient_snapshots.rows(), 0);
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(pressure_gradient_snapshots, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-13 * sv(0)) ++rank;
  out.Q = svd.matrixU().leftCols(rank);
  return out;
}

}  // namespace flowrom
