#pragma once

// Operator inference for the reduced velocity ODE and the decoupled pressure
// map: regressor assembly with compressed quadratic features, truncated-SVD
// least squares, the linear variant, the inhomogeneous extension with a
// uperp-derivative regressor, and L-curve tolerance selection.

#include "flowrom/linalg.hpp"
#include "flowrom/model.hpp"

#include <vector>

namespace flowrom {

enum class Regressor { state, quadratic, input, constant, input_derivative };

inline const char* regressor_name(Regressor r) {
  switch (r) {
    case Regressor::state: return "state";
    case Regressor::quadratic: return "quadratic";
    case Regressor::input: return "input";
    case Regressor::constant: return "constant";
    case Regressor::input_derivative: return "input_derivative";
  }
  return "?";
}

/// Which feature blocks enter the data matrix. The state block is always
/// present; the full quadratic model uses {quadratic, input}, the linear
/// variant just {input}.
struct RegressorFlags {
  bool quadratic = true;
  bool input = true;
  bool constant = false;
  bool input_derivative = false;

  static RegressorFlags quadratic_model() { return {true, true, false, false}; }
  static RegressorFlags linear_model() { return {false, true, false, false}; }
};

/// Stacked data matrix for the least-squares problems, with the row layout
/// recorded so inferred operators can be unpacked again.
struct RegressorMatrix {
  struct Block {
    Regressor label;
    Index rows = 0;
    Index offset = 0;
  };
  std::vector<Block> blocks;
  Matrix data;  // k x (N+1)

  const Block* find(Regressor label) const {
    for (const Block& b : blocks) {
      if (b.label == label) return &b;
    }
    return nullptr;
  }
};

/// Stacks the requested blocks in the canonical order
/// [state; quadratic; input; constant; input_derivative]. The quadratic block
/// holds compressed features (unique monomials), which keeps the data matrix
/// free of the structural rank deficiency of the plain Kronecker form.
inline RegressorMatrix assemble_regressors(const Matrix& Xhat, const Matrix& U = Matrix(),
                                           const Matrix& Udot_perp = Matrix(),
                                           const RegressorFlags& flags = RegressorFlags()) {
  const Index cols = Xhat.cols();
  if (cols == 0) throw std::invalid_argument("assemble_regressors: no data columns");
  RegressorMatrix out;
  std::vector<std::pair<Regressor, Matrix>> parts;
  parts.emplace_back(Regressor::state, Xhat);
  if (flags.quadratic) parts.emplace_back(Regressor::quadratic, quad_features_columns(Xhat));
  if (flags.input) {
    if (U.size() == 0) throw std::invalid_argument("assemble_regressors: input block requested but U is empty");
    if (U.cols() != cols) throw std::invalid_argument("assemble_regressors: U column count mismatch");
    parts.emplace_back(Regressor::input, U);
  }
  if (flags.constant) parts.emplace_back(Regressor::constant, Matrix::Ones(1, cols));
  if (flags.input_derivative) {
    if (Udot_perp.size() == 0) {
      throw std::invalid_argument("assemble_regressors: input_derivative block requested but Udot_perp is empty");
    }
    if (Udot_perp.cols() != cols) {
      throw std::invalid_argument("assemble_regressors: Udot_perp column count mismatch");
    }
    parts.emplace_back(Regressor::input_derivative, Udot_perp);
  }
  Index total = 0;
  for (const auto& [label, block] : parts) total += block.rows();
  out.data.resize(total, cols);
  Index offset = 0;
  for (const auto& [label, block] : parts) {
    out.data.middleRows(offset, block.rows()) = block;
    out.blocks.push_back({label, block.rows(), offset});
    offset += block.rows();
  }
  return out;
}

namespace detail {
inline Matrix block_of(const Matrix& packed, const RegressorMatrix& reg, Regressor label) {
  const RegressorMatrix::Block* b = reg.find(label);
  return b == nullptr ? Matrix() : packed.middleCols(b->offset, b->rows).eval();
}
}  // namespace detail

/// Solves min || Xdot - [A, H, B, ...] D ||_F by the truncated-SVD
/// minimum-norm least squares and unpacks the operator blocks.
inline ReducedQuadModel infer_velocity_model(const Matrix& Xhat, const Matrix& Xdot, const Matrix& U,
                                             const RegressorFlags& flags, double tol,
                                             const Matrix& Udot_perp = Matrix()) {
  if (Xdot.rows() != Xhat.rows() || Xdot.cols() != Xhat.cols()) {
    throw std::invalid_argument("infer_velocity_model: derivative data shape mismatch");
  }
  const RegressorMatrix reg = assemble_regressors(Xhat, U, Udot_perp, flags);
  const Matrix packed = min_norm_lstsq(reg.data, Xdot, tol);
  ReducedQuadModel rom;
  rom.A = detail::block_of(packed, reg, Regressor::state);
  rom.H = detail::block_of(packed, reg, Regressor::quadratic);
  rom.B = detail::block_of(packed, reg, Regressor::input);
  rom.c = detail::block_of(packed, reg, Regressor::constant);
  rom.K = detail::block_of(packed, reg, Regressor::input_derivative);
  return rom;
}

/// Algebraic pressure map p^ = Ap x^ + Hp (x^ (x) x^) + Bp u in reduced
/// coordinates. Same regression as the velocity model but with the pressure
/// trajectory itself (not a derivative) as the right-hand side.
struct PressureMap {
  Matrix A;  // r_p x r
  Matrix H;  // compact
  Matrix B;

  Matrix predict(const Matrix& Xhat, const Matrix& U) const {
    Matrix out = A * Xhat;
    if (H.size() != 0) out += H * quad_features_columns(Xhat);
    if (B.size() != 0 && U.size() != 0) out += B * U;
    return out;
  }
};

inline PressureMap infer_pressure_map(const Matrix& Phat, const Matrix& Xhat, const Matrix& U,
                                      const RegressorFlags& flags, double tol) {
  if (Phat.cols() != Xhat.cols()) throw std::invalid_argument("infer_pressure_map: column count mismatch");
  const RegressorMatrix reg = assemble_regressors(Xhat, U, Matrix(), flags);
  const Matrix packed = min_norm_lstsq(reg.data, Phat, tol);
  PressureMap map;
  map.A = detail::block_of(packed, reg, Regressor::state);
  map.H = detail::block_of(packed, reg, Regressor::quadratic);
  map.B = detail::block_of(packed, reg, Regressor::input);
  return map;
}

/// One sample of the L-curve: the data-fidelity residual and the solution
/// norm of the truncated solve at a given tolerance.
struct LCurvePoint {
  double tol = 0.0;
  double residual_norm = 0.0;
  double solution_norm = 0.0;
  Index rank = 0;
};

/// Evaluates the tolerance sweep. Rank-0 truncations are recorded, not
/// errors: residual ||RHS||_F and solution 0.
inline std::vector<LCurvePoint> l_curve_scan(const Matrix& D, const Matrix& RHS, const std::vector<double>& tols) {
  for (size_t i = 0; i < tols.size(); ++i) {
    if (!(tols[i] > 0)) throw std::invalid_argument("l_curve_scan: tolerances must be positive");
    if (i > 0 && tols[i] < tols[i - 1]) throw std::invalid_argument("l_curve_scan: tolerances must be sorted");
  }
  Eigen::BDCSVD<Matrix> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  std::vector<LCurvePoint> points;
  points.reserve(tols.size());
  for (double tol : tols) {
    Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > tol) ++rank;
    LCurvePoint pt;
    pt.tol = tol;
    pt.rank = rank;
    if (rank == 0) {
      pt.residual_norm = RHS.norm();
      pt.solution_norm = 0.0;
    } else {
      const Matrix X = ((RHS * svd.matrixV().leftCols(rank)) * sigma.head(rank).cwiseInverse().asDiagonal()) *
                       svd.matrixU().leftCols(rank).transpose();
      pt.residual_norm = (RHS - X * D).norm();
      pt.solution_norm = X.norm();
    }
    points.push_back(pt);
  }
  return points;
}

/// Automated knee selection: the point of maximum Menger curvature of the
/// log-log (residual, solution-norm) polyline. Coincident points are merged
/// first (keeping the largest tolerance of each group), ties and degenerate
/// scans resolve toward the larger tolerance.
inline double pick_tolerance(const std::vector<LCurvePoint>& points) {
  if (points.size() < 3) throw std::invalid_argument("pick_tolerance: need at least 3 points");

  struct Node {
    double x, y, tol;
  };
  std::vector<Node> nodes;
  const double floor_val = 1e-300;  // keeps log() finite for exact zeros
  for (const LCurvePoint& pt : points) {
    const double x = std::log10(std::max(pt.residual_norm, floor_val));
    const double y = std::log10(std::max(pt.solution_norm, floor_val));
    if (!nodes.empty() && std::abs(nodes.back().x - x) < 1e-12 && std::abs(nodes.back().y - y) < 1e-12) {
      nodes.back().tol = std::max(nodes.back().tol, pt.tol);  // merge plateau, keep larger tol
    } else {
      nodes.push_back({x, y, pt.tol});
    }
  }
  double best_tol = nodes.back().tol;  // degenerate rule: largest tol
  double best_curvature = 0.0;
  for (size_t i = 1; i + 1 < nodes.size(); ++i) {
    const Node &a = nodes[i - 1], &b = nodes[i], &c = nodes[i + 1];
    const double area2 = std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    const double la = std::hypot(b.x - a.x, b.y - a.y);
    const double lb = std::hypot(c.x - b.x, c.y - b.y);
    const double lc = std::hypot(c.x - a.x, c.y - a.y);
    if (la == 0.0 || lb == 0.0 || lc == 0.0) continue;
    const double curvature = 2.0 * area2 / (la * lb * lc);
    // >= so that among equal curvatures the larger tolerance wins
    if (curvature >= best_curvature && curvature > 1e-12) {
      best_curvature = curvature;
      best_tol = b.tol;
    }
  }
  return best_tol;
}

}  // namespace flowrom
