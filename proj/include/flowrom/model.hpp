#pragma once

// Full-order and reduced-order model containers, validation, right-hand-side
// evaluation, and the deterministic synthetic-model generator used for
// desk-scale experiments.

#include "flowrom/linalg.hpp"
#include "flowrom/rng.hpp"

#include <optional>
#include <string>
#include <utility>

namespace flowrom {

/// Semi-discrete incompressible-flow DAE
///
///   E11 v'(t) = A11 v(t) + A12 p(t) + H (v (x) v) + B1 u(t)
///           0 = A12^T v(t) + Bperp uperp(t)
///
/// with E11 symmetric positive definite and A12 of full column rank, so that
/// S = A12^T E11^{-1} A12 is SPD. The quadratic operator is stored compact
/// (n_v x n_v(n_v+1)/2, see linalg.hpp); the file exchange format carries the
/// full n_v x n_v^2 form.
struct QuadDaeModel {
  Matrix E11;
  Matrix A11;
  Matrix A12;
  Matrix H;      // compact
  Matrix B1;
  Matrix Bperp;  // n_p x 1; empty when the constraint is homogeneous
  Matrix Cv;     // optional output maps, empty when absent
  Matrix Cp;

  Index n_v() const { return E11.rows(); }
  Index n_p() const { return A12.cols(); }
  Index n_inputs() const { return B1.cols(); }
  bool has_constraint_forcing() const { return Bperp.size() != 0; }
};

/// Low-order ODE
///
///   x'(t) = A x + H (x (x) x) + B u + c + N x uperp + K uperp'(t)
///
/// where H is compact and c, N, K are optional (empty when absent). Covers
/// the inferred models, the Galerkin-projected models, and the corrected
/// operators for inhomogeneous constraints.
struct ReducedQuadModel {
  Matrix A;
  Matrix H;  // compact, r x r(r+1)/2
  Matrix B;
  Matrix c;  // r x 1
  Matrix N;  // r x r
  Matrix K;  // r x 1

  Index order() const { return A.rows(); }

  Vector rhs(const Vector& x, const Vector& u, double uperp = 0.0, double udot_perp = 0.0) const {
    Vector out = A * x;
    if (H.size() != 0) out += apply_quadratic(H, x);
    if (B.size() != 0 && u.size() != 0) out += B * u;
    if (c.size() != 0) out += c.col(0);
    if (N.size() != 0) out += uperp * (N * x);
    if (K.size() != 0) out += udot_perp * K.col(0);
    return out;
  }
};

/// Trajectory data on a time grid: column k of each block belongs to times(k).
/// P, U and Uperp are optional (empty when absent).
struct SnapshotSet {
  Vector times;
  Matrix V;
  Matrix P;
  Matrix U;
  Matrix Uperp;  // 1 x (N+1)

  Index samples() const { return times.size(); }

  /// Throws when block column counts disagree or times are not increasing.
  void check() const {
    const Index n = times.size();
    if (n < 2) throw std::invalid_argument("snapshot set needs at least two samples");
    for (Index k = 1; k < n; ++k) {
      if (!(times(k) > times(k - 1))) throw std::invalid_argument("snapshot times not strictly increasing");
    }
    auto check_block = [&](const Matrix& m, const char* name) {
      if (m.size() != 0 && m.cols() != n) {
        throw std::invalid_argument(std::string("snapshot block ") + name + " has " +
                                    std::to_string(m.cols()) + " columns, expected " + std::to_string(n));
      }
    };
    check_block(V, "V");
    check_block(P, "P");
    check_block(U, "U");
    check_block(Uperp, "Uperp");
  }

  bool uniform() const {
    const Index n = times.size();
    if (n < 2) return false;
    const double dt = (times(n - 1) - times(0)) / static_cast<double>(n - 1);
    for (Index k = 1; k < n; ++k) {
      if (std::abs(times(k) - times(k - 1) - dt) > 1e-12 * dt) return false;
    }
    return true;
  }

  double uniform_dt() const {
    if (!uniform()) throw std::runtime_error("snapshot grid is not uniformly spaced");
    return (times(times.size() - 1) - times(0)) / static_cast<double>(times.size() - 1);
  }
};

struct ValidationReport {
  bool ok = false;
  bool e11_spd = false;
  Index a12_rank = 0;
  double s_condition = 0.0;  // estimate from the SVD of S
  std::string message;
};

/// Checks the structural assumptions: E11 SPD, A12 full column rank, and
/// S = A12^T E11^{-1} A12 SPD-factorizable. Returns a diagnostics report;
/// inspect .ok (fails soft so the CLI can print the reasons).
inline ValidationReport validate(const QuadDaeModel& model) {
  ValidationReport rep;
  if (model.n_p() >= model.n_v()) {
    rep.message = "n_p must be smaller than n_v";
    return rep;
  }
  try {
    spd_factor(model.E11);
    rep.e11_spd = true;
  } catch (const std::exception& e) {
    rep.message = std::string("E11 is not SPD: ") + e.what();
    return rep;
  }
  if (model.n_p() > 0) {
    Eigen::BDCSVD<Matrix> a12_svd(model.A12);
    const Vector& sv = a12_svd.singularValues();
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-13 * sv(0)) ++rank;
    rep.a12_rank = rank;
    if (rank < model.n_p()) {
      rep.message = "A12 is rank deficient (rank " + std::to_string(rank) + " of " +
                    std::to_string(model.n_p()) + "); S is singular";
      return rep;
    }
    const Matrix S = model.A12.transpose() * Eigen::LLT<Matrix>(model.E11).solve(model.A12);
    try {
      spd_factor(0.5 * (S + S.transpose()));
    } catch (const std::exception& e) {
      rep.message = std::string("S = A12^T E11^{-1} A12 failed to factorize: ") + e.what();
      return rep;
    }
    Eigen::BDCSVD<Matrix> s_svd(S);
    const Vector& ssv = s_svd.singularValues();
    rep.s_condition = ssv(0) / ssv(ssv.size() - 1);
  } else {
    rep.a12_rank = 0;
    rep.s_condition = 1.0;
  }
  rep.ok = true;
  rep.message = "ok";
  return rep;
}

/// Throws unless validate(model) passes.
inline void require_valid(const QuadDaeModel& model) {
  const ValidationReport rep = validate(model);
  if (!rep.ok) throw std::invalid_argument("invalid model: " + rep.message);
}

/// DAE residuals at a state: differential part r_d = A11 v + A12 p + H(v(x)v) + B1 u
/// and algebraic part r_a = A12^T v + Bperp uperp. (E11 v' does not enter.)
inline std::pair<Vector, Vector> dae_rhs(const QuadDaeModel& model, const Vector& v, const Vector& p,
                                         const Vector& u, double uperp = 0.0) {
  if (v.size() != model.n_v() || p.size() != model.n_p() || u.size() != model.n_inputs()) {
    throw std::invalid_argument("dae_rhs: dimension mismatch");
  }
  Vector r_d = model.A11 * v + apply_quadratic(model.H, v);
  if (model.n_p() > 0) r_d += model.A12 * p;
  if (u.size() > 0) r_d += model.B1 * u;
  Vector r_a = model.A12.transpose() * v;
  if (model.has_constraint_forcing()) r_a += model.Bperp.col(0) * uperp;
  return {std::move(r_d), std::move(r_a)};
}

/// Deterministic random demo model. All entries come from one SplitMix64 /
/// Box-Muller stream seeded with `seed`, filled column-major in the order
/// G (for E11), W (for A11), A12, H (compact), B1; then
///
///   E11 = I + 0.1 G^T G,   A11 = -I - W^T W / n_v,
///
/// and A12, H, B1 are scaled by 1/n_v. The A11 shift makes the symmetric
/// part negative definite so that desk-scale trajectories stay bounded.
/// Bperp is zero (set it afterwards for inhomogeneous experiments).
inline QuadDaeModel random_demo(std::uint64_t seed, Index n_v, Index n_p, Index m) {
  if (n_v <= 0 || n_p < 0 || m < 0 || n_v <= n_p) {
    throw std::invalid_argument("random_demo: need n_v > n_p >= 0 and m >= 0");
  }
  NormalStream rng(seed);
  const double scale = 1.0 / static_cast<double>(n_v);
  QuadDaeModel model;
  const Matrix G = rng.matrix(n_v, n_v);
  model.E11 = Matrix::Identity(n_v, n_v) + 0.1 * G.transpose() * G;
  const Matrix W = rng.matrix(n_v, n_v);
  model.A11 = -Matrix::Identity(n_v, n_v) - (W.transpose() * W) * scale;
  model.A12 = rng.matrix(n_v, n_p) * scale;
  model.H = rng.matrix(n_v, quad_feature_dim(n_v)) * scale;
  model.B1 = rng.matrix(n_v, m) * scale;
  model.Bperp = Matrix::Zero(n_p, 1);
  require_valid(model);
  return model;
}

}  // namespace flowrom
