#pragma once

// POD bases (plain and mass-weighted), snapshot projection, constraint
// diagnostics, intrusive Galerkin reduction, and the divergence-free
// correction of a basis through the Leray projector.

#include "flowrom/leray.hpp"
#include "flowrom/model.hpp"

namespace flowrom {

/// Orthonormal reduction basis. Plain bases satisfy V^T V = I; mass-weighted
/// bases satisfy V^T E11 V = I (weight_factor holds the Cholesky factor L of
/// E11 used to build them). singular_values keeps the full descending list
/// from the SVD that produced the basis.
struct PodBasis {
  Matrix vectors;         // n x r
  Vector singular_values; // full list, not just the leading r
  Matrix weight_factor;   // empty for plain bases

  Index order() const { return vectors.cols(); }
  bool weighted() const { return weight_factor.size() != 0; }
};

namespace detail {
inline Index numerical_rank(const Vector& sigma) {
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > 1e-13 * sigma(0)) ++rank;
  return rank;
}
}  // namespace detail

/// Number of singular values above the relative threshold 1e-13 * sigma_1.
inline Index numerical_rank(const Matrix& snapshots) {
  Eigen::BDCSVD<Matrix> svd(snapshots);
  return detail::numerical_rank(svd.singularValues());
}

/// Plain POD: the r dominant left singular vectors of the snapshot matrix.
/// Weighted POD (pass E11): V = L^{-T} U~_r with U~_r the dominant left
/// singular vectors of L^T * snapshots, the minimizer of the E11-weighted
/// projection error, giving V^T E11 V = I. Requesting r beyond the numerical
/// rank is an error (no silent padding).
inline PodBasis pod_basis(const Matrix& snapshots, Index r, const Matrix* weight = nullptr) {
  if (r < 1) throw std::invalid_argument("pod_basis: need r >= 1");
  if (!snapshots.allFinite()) throw std::invalid_argument("pod_basis: non-finite snapshots");
  PodBasis basis;
  Matrix data;
  Matrix L;
  if (weight != nullptr && weight->size() != 0) {
    L = spd_factor(*weight);
    data = L.transpose() * snapshots;
  } else {
    data = snapshots;
  }
  Eigen::BDCSVD<Matrix> svd(data, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  const Index rank = detail::numerical_rank(sigma);
  if (r > rank) {
    throw std::invalid_argument("pod_basis: requested order " + std::to_string(r) +
                                " exceeds the numerical rank " + std::to_string(rank));
  }
  basis.singular_values = sigma;
  if (L.size() != 0) {
    basis.vectors = L.transpose().triangularView<Eigen::Upper>().solve(svd.matrixU().leftCols(r));
    basis.weight_factor = L;
  } else {
    basis.vectors = svd.matrixU().leftCols(r);
  }
  return basis;
}

/// How much a velocity basis violates the algebraic constraint:
/// ||A12^T V||_F / ||V||_F.
inline double constraint_residual(const Matrix& A12, const Matrix& basis_vectors) {
  const double nrm = basis_vectors.norm();
  if (nrm == 0.0) throw std::invalid_argument("constraint_residual: zero basis");
  if (A12.size() == 0) return 0.0;
  return (A12.transpose() * basis_vectors).norm() / nrm;
}

inline double constraint_residual(const Matrix& A12, const PodBasis& basis) {
  return constraint_residual(A12, basis.vectors);
}

/// Reduced trajectory X^ = V^T X (plain Euclidean projection, matching the
/// operator-inference pipeline).
inline Matrix project_snapshots(const PodBasis& basis, const Matrix& snapshots) {
  if (snapshots.rows() != basis.vectors.rows()) {
    throw std::invalid_argument("project_snapshots: dimension mismatch");
  }
  return basis.vectors.transpose() * snapshots;
}

/// Block Galerkin reduction of the DAE. The quadratic operator is reduced in
/// compact form column by column: column (i,j) of the reduced compact H is
/// V^T H(v_i (x) v_j + v_j (x) v_i) for i < j and V^T H(v_i (x) v_i) on the
/// diagonal, which reproduces V^T H (V (x) V) applied to symmetric features.
struct GalerkinReduced {
  Matrix E11;  // r x r
  Matrix A11;
  Matrix A12;  // r x r_p; empty when no pressure basis was given
  Matrix H;    // compact
  Matrix B1;
  double a12_norm = 0.0;     // ||V^T A12 Vp||_F (or ||V^T A12||_F without Vp)
  bool divergence_free = false;  // a12_norm <= 1e-10

  /// Pure-ODE form with the reduced mass matrix folded in:
  /// x' = (E~^{-1}A~) x + (E~^{-1}H~)(x (x) x) + (E~^{-1}B~) u.
  ReducedQuadModel ode() const {
    Eigen::FullPivLU<Matrix> lu(E11);
    if (!lu.isInvertible()) throw std::runtime_error("GalerkinReduced::ode: singular reduced mass matrix");
    ReducedQuadModel rom;
    rom.A = lu.solve(A11);
    rom.H = lu.solve(H);
    rom.B = lu.solve(B1);
    return rom;
  }
};

inline GalerkinReduced galerkin_reduce(const QuadDaeModel& model, const PodBasis& Vv,
                                       const PodBasis* Vp = nullptr) {
  require_valid(model);
  const Matrix& V = Vv.vectors;
  if (V.rows() != model.n_v()) throw std::invalid_argument("galerkin_reduce: basis dimension mismatch");
  const Index r = V.cols();
  GalerkinReduced red;
  red.E11 = V.transpose() * model.E11 * V;
  red.A11 = V.transpose() * model.A11 * V;
  red.B1 = V.transpose() * model.B1;
  red.H.resize(r, quad_feature_dim(r));
  Index k = 0;
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j, ++k) {
      red.H.col(k) = (i == j) ? (V.transpose() * apply_quadratic(model.H, V.col(i))).eval()
                              : (V.transpose() * apply_quadratic_pair(model.H, V.col(i), V.col(j))).eval();
    }
  }
  if (Vp != nullptr && model.n_p() > 0) {
    red.A12 = V.transpose() * model.A12 * Vp->vectors;
    red.a12_norm = red.A12.norm();
  } else {
    red.a12_norm = (V.transpose() * model.A12).norm();
  }
  red.divergence_free = red.a12_norm <= 1e-10;
  return red;
}

/// Galerkin reduction of the corrected v_top equation for a constant uperp:
/// the bilinear term stays as N and the uperp^2 term becomes the constant
/// c = E~^{-1} V^T c2 * uperp^2.
inline ReducedQuadModel reduce_corrected(const QuadDaeModel& model, const CorrectedOperators& corr,
                                         const PodBasis& Vv, double uperp_const) {
  const GalerkinReduced red = galerkin_reduce(model, Vv);
  Eigen::FullPivLU<Matrix> lu(red.E11);
  if (!lu.isInvertible()) throw std::runtime_error("reduce_corrected: singular reduced mass matrix");
  const Matrix& V = Vv.vectors;
  ReducedQuadModel rom;
  rom.A = lu.solve(red.A11);
  rom.H = lu.solve(red.H);
  rom.B = lu.solve(red.B1);
  rom.N = lu.solve(V.transpose() * corr.N * V);
  rom.c = lu.solve(V.transpose() * corr.c2) * (uperp_const * uperp_const);
  return rom;
}

/// Replaces the basis columns by their Leray projections and re-orthonormalizes
/// (SVD), so the result satisfies the constraint to projector accuracy. Errors
/// if the projection collapses the span. Keeps the original singular-value
/// diagnostics.
inline PodBasis divfree_correct(const PodBasis& basis, const LerayProjector& proj) {
  Matrix projected(basis.vectors.rows(), basis.vectors.cols());
  for (Index j = 0; j < basis.vectors.cols(); ++j) projected.col(j) = proj.apply(basis.vectors.col(j));
  Eigen::BDCSVD<Matrix> svd(projected, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  const Index rank = detail::numerical_rank(sigma);
  if (rank < basis.order()) {
    throw std::runtime_error("divfree_correct: projected basis is rank deficient (rank " +
                             std::to_string(rank) + " of " + std::to_string(basis.order()) + ")");
  }
  PodBasis out;
  out.vectors = svd.matrixU().leftCols(rank);
  out.singular_values = basis.singular_values;
  return out;
}

}  // namespace flowrom
