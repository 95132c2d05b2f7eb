#pragma once

// Dense matrix utilities shared by the whole pipeline: column-wise Kronecker
// products, the compressed (unique-monomial) representation of quadratic
// features, tolerance-truncated SVD, minimum-norm least squares, and SPD
// Cholesky factorization.
//
// All routines are pure functions of their inputs, run single-threaded, and
// use deterministic (non-randomized) algorithms so repeated runs produce
// bit-identical operators.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace flowrom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Number of unique quadratic monomials x_i x_j (i <= j) in dimension r.
inline Index quad_feature_dim(Index r) { return r * (r + 1) / 2; }

/// Flat index of the (i, j) monomial, i <= j, in the compressed ordering
/// (0,0), (0,1), ..., (0,r-1), (1,1), ..., (r-1,r-1).
inline Index quad_feature_index(Index r, Index i, Index j) {
  return i * r - i * (i - 1) / 2 + (j - i);
}

/// Recover r from a compressed feature count r(r+1)/2; throws if not of that form.
inline Index quad_feature_order(Index compressed_rows) {
  const Index r = static_cast<Index>((std::sqrt(8.0 * static_cast<double>(compressed_rows) + 1.0) - 1.0) / 2.0 + 0.5);
  if (quad_feature_dim(r) != compressed_rows) {
    throw std::invalid_argument("compressed feature count " + std::to_string(compressed_rows) +
                                " is not of the form r(r+1)/2");
  }
  return r;
}

/// Column-wise Kronecker product: column i of the result is g_i (x) g_i.
inline Matrix kron_columnwise(const Matrix& G) {
  if (!G.allFinite()) throw std::invalid_argument("kron_columnwise: non-finite input");
  const Index r = G.rows(), n = G.cols();
  Matrix K(r * r, n);
  for (Index c = 0; c < n; ++c) {
    for (Index i = 0; i < r; ++i) {
      K.col(c).segment(i * r, r) = G(i, c) * G.col(c);
    }
  }
  return K;
}

/// Compressed quadratic features of a single state vector: entries x_i x_j
/// for i <= j, in the ordering of quad_feature_index.
inline Vector quad_features(const Vector& x) {
  const Index r = x.size();
  Vector f(quad_feature_dim(r));
  Index k = 0;
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) f(k++) = x(i) * x(j);
  }
  return f;
}

/// Removes the duplicated cross terms from a column-wise Kronecker matrix:
/// r^2 rows collapse to r(r+1)/2 unique monomials per column. Keeps the
/// value x_i x_j once (no factor-2 convention); coefficient merging happens
/// in expand_quadratic_operator.
inline Matrix compress_quadratic(const Matrix& G_kron) {
  const Index rsq = G_kron.rows();
  const Index r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(rsq))));
  if (r * r != rsq) {
    throw std::invalid_argument("compress_quadratic: row count " + std::to_string(rsq) +
                                " is not a perfect square");
  }
  Matrix C(quad_feature_dim(r), G_kron.cols());
  Index k = 0;
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) C.row(k++) = G_kron.row(i * r + j);
  }
  return C;
}

/// Compressed quadratic features of every column of X (r x N -> r(r+1)/2 x N).
inline Matrix quad_features_columns(const Matrix& X) {
  const Index r = X.rows();
  Matrix F(quad_feature_dim(r), X.cols());
  for (Index c = 0; c < X.cols(); ++c) F.col(c) = quad_features(X.col(c));
  return F;
}

/// Expands a compact quadratic operator H (r x r(r+1)/2) to the full
/// H (r x r^2) acting on v (x) v: cross-term coefficients split evenly
/// between the (i,j) and (j,i) Kronecker slots so that
/// H_compact * compress(v (x) v) == H_full * (v (x) v) for every v.
inline Matrix expand_quadratic_operator(const Matrix& H_compact) {
  const Index r = quad_feature_order(H_compact.cols());
  if (H_compact.rows() == 0) return Matrix(0, r * r);
  Matrix H(H_compact.rows(), r * r);
  Index k = 0;
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j, ++k) {
      if (i == j) {
        H.col(i * r + j) = H_compact.col(k);
      } else {
        H.col(i * r + j) = 0.5 * H_compact.col(k);
        H.col(j * r + i) = 0.5 * H_compact.col(k);
      }
    }
  }
  return H;
}

/// Inverse of expand_quadratic_operator: merges (i,j) and (j,i) columns of a
/// full r x r^2 operator (only the symmetric part acts on v (x) v).
inline Matrix compress_quadratic_operator(const Matrix& H_full) {
  const Index rsq = H_full.cols();
  const Index r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(rsq))));
  if (r * r != rsq) {
    throw std::invalid_argument("compress_quadratic_operator: column count is not a perfect square");
  }
  Matrix H(H_full.rows(), quad_feature_dim(r));
  Index k = 0;
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j, ++k) {
      H.col(k) = (i == j) ? H_full.col(i * r + j) : (H_full.col(i * r + j) + H_full.col(j * r + i)).eval();
    }
  }
  return H;
}

/// H_compact applied to the quadratic features of x, i.e. H_full * (x (x) x).
inline Vector apply_quadratic(const Matrix& H_compact, const Vector& x) {
  return H_compact * quad_features(x);
}

/// H_full * (x (x) y + y (x) x) evaluated directly from the compact storage.
inline Vector apply_quadratic_pair(const Matrix& H_compact, const Vector& x, const Vector& y) {
  const Index r = x.size();
  Vector f(quad_feature_dim(r));
  Index k = 0;
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) {
      f(k++) = (i == j) ? 2.0 * x(i) * y(i) : x(i) * y(j) + x(j) * y(i);
    }
  }
  return H_compact * f;
}

/// Tolerance-truncated SVD. Retains exactly the singular triplets with
/// sigma > tol; rank 0 is a valid result (caller decides what to do).
struct TruncatedSvd {
  Matrix left;     // n x rank, orthonormal columns
  Vector values;   // descending, all > tol_used
  Matrix right;    // N x rank, orthonormal columns
  Index rank = 0;
  double tol_used = 0.0;
};

inline TruncatedSvd truncated_svd(const Matrix& M, double tol) {
  if (M.size() == 0) throw std::invalid_argument("truncated_svd: empty matrix");
  if (tol < 0) throw std::invalid_argument("truncated_svd: negative tolerance");
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > tol) ++rank;
  TruncatedSvd out;
  out.left = svd.matrixU().leftCols(rank);
  out.values = sigma.head(rank);
  out.right = svd.matrixV().leftCols(rank);
  out.rank = rank;
  out.tol_used = tol;
  return out;
}

/// Minimum-Frobenius-norm solution X (q x k) of min ||X D - RHS||_F over the
/// tol-truncated SVD of D:  X = RHS V~ S~^{-1} U~^T.
inline Matrix min_norm_lstsq(const Matrix& D, const Matrix& RHS, double tol) {
  if (D.cols() != RHS.cols()) {
    throw std::invalid_argument("min_norm_lstsq: column count mismatch (" + std::to_string(D.cols()) +
                                " vs " + std::to_string(RHS.cols()) + ")");
  }
  const TruncatedSvd svd = truncated_svd(D, tol);
  if (svd.rank == 0) {
    throw std::runtime_error("min_norm_lstsq: tolerance " + std::to_string(tol) +
                             " truncates the data matrix to rank 0");
  }
  return ((RHS * svd.right) * svd.values.cwiseInverse().asDiagonal()) * svd.left.transpose();
}

/// min_norm_lstsq with the tolerance given relative to the largest singular
/// value of D (single SVD).
inline Matrix min_norm_lstsq_rel(const Matrix& D, const Matrix& RHS, double rel_tol) {
  if (D.cols() != RHS.cols()) throw std::invalid_argument("min_norm_lstsq_rel: column count mismatch");
  Eigen::BDCSVD<Matrix> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0) throw std::invalid_argument("min_norm_lstsq_rel: empty data matrix");
  const double tol = rel_tol * sigma(0);
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > tol) ++rank;
  if (rank == 0) throw std::runtime_error("min_norm_lstsq_rel: rank-0 truncation");
  return ((RHS * svd.matrixV().leftCols(rank)) * sigma.head(rank).cwiseInverse().asDiagonal()) *
         svd.matrixU().leftCols(rank).transpose();
}

/// Lower-triangular Cholesky factor L with L L^T = M. M must be symmetric
/// (1e-12 relative) and positive definite.
inline Matrix spd_factor(const Matrix& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("spd_factor: matrix not square");
  const double nrm = M.norm();
  if ((M - M.transpose()).norm() > 1e-12 * std::max(nrm, 1e-300)) {
    throw std::invalid_argument("spd_factor: matrix not symmetric");
  }
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("spd_factor: matrix not positive definite");
  }
  return llt.matrixL();
}

}  // namespace flowrom
