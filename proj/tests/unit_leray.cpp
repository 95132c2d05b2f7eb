#include "flowrom/leray.hpp"
#include "flowrom/model.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace flowrom;
using Catch::Approx;

namespace {
QuadDaeModel axis_model() {
  // E11 = I, A12 = e1: the projector is diag(0, 1)
  QuadDaeModel m;
  m.E11 = Matrix::Identity(2, 2);
  m.A11 = -Matrix::Identity(2, 2);
  m.A12 = Matrix(2, 1);
  m.A12 << 1, 0;
  m.H = Matrix::Zero(2, quad_feature_dim(2));
  m.B1 = Matrix::Zero(2, 1);
  m.Bperp = Matrix::Zero(1, 1);
  return m;
}
}  // namespace

TEST_CASE("leray projector on the axis model", "[leray]") {
  const LerayProjector proj(axis_model());
  Vector x(2);
  x << 3, 4;
  CHECK(proj.apply(x).isApprox(Vector{{0, 4}}));
  CHECK(proj.apply_transpose(x).isApprox(Vector{{0, 4}}));  // symmetric here since E = I
}

TEST_CASE("leray invariants on random models", "[leray]") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const QuadDaeModel m = random_demo(seed, 6, 2, 1);
    const LerayProjector proj(m);
    NormalStream rng(seed + 1000);
    const Vector x = rng.matrix(6, 1).col(0);
    const Vector px = proj.apply(x);
    CHECK((proj.apply(px) - px).norm() <= 1e-10 * x.norm());                        // idempotent
    CHECK((m.A12.transpose() * px).norm() <= 1e-10 * m.A12.norm() * x.norm());      // div-free range
    Matrix pta12(6, 2);
    for (Index j = 0; j < 2; ++j) pta12.col(j) = proj.apply_transpose(m.A12.col(j));
    CHECK(pta12.norm() <= 1e-10 * m.A12.norm());                                    // Pi^T A12 = 0
  }
}

TEST_CASE("pressure from velocity, axis model", "[leray]") {
  const QuadDaeModel m = axis_model();
  const LerayProjector proj(m);
  Vector v(2);
  v << 0, 1;
  CHECK(pressure_from_velocity(m, proj, v, Vector::Zero(1))(0) == Approx(0.0).margin(1e-15));
  v << 1, 0;
  CHECK(pressure_from_velocity(m, proj, v, Vector::Zero(1))(0) == Approx(1.0));
}

TEST_CASE("recovered pressure closes the differential residual", "[leray]") {
  const QuadDaeModel m = random_demo(11, 6, 2, 2);
  const LerayProjector proj(m);
  NormalStream rng(5);
  // constraint-satisfying state
  const Vector v = proj.apply(rng.matrix(6, 1).col(0));
  const Vector u = rng.matrix(2, 1).col(0);
  const Vector p = pressure_from_velocity(m, proj, v, u);
  auto [rd, ra] = dae_rhs(m, v, p, u);
  const Vector residual = m.A12.transpose() * proj.solve_e11(rd);
  CHECK(residual.norm() <= 1e-10 * std::max(1.0, rd.norm()));
}

TEST_CASE("ode_rhs keeps the constraint and matches the saddle oracle", "[leray]") {
  const QuadDaeModel m = random_demo(21, 6, 2, 2);
  const LerayProjector proj(m);
  NormalStream rng(31);
  const Vector v = proj.apply(rng.matrix(6, 1).col(0));
  const Vector u = rng.matrix(2, 1).col(0);
  const Vector vdot = ode_rhs(m, proj, v, u);
  CHECK((m.A12.transpose() * vdot).norm() <= 1e-10 * std::max(1.0, vdot.norm()));

  // oracle: solve the index-reduced saddle system for (vdot, p) directly
  Matrix saddle = Matrix::Zero(8, 8);
  saddle.topLeftCorner(6, 6) = m.E11;
  saddle.topRightCorner(6, 2) = -m.A12;
  saddle.bottomLeftCorner(2, 6) = m.A12.transpose();
  Vector rhs(8);
  rhs.head(6) = m.A11 * v + apply_quadratic(m.H, v) + m.B1 * u;
  rhs.tail(2).setZero();
  const Vector sol = Eigen::FullPivLU<Matrix>(saddle).solve(rhs);
  CHECK((vdot - sol.head(6)).norm() <= 1e-10 * std::max(1.0, sol.head(6).norm()));
  const Vector p = pressure_from_velocity(m, proj, v, u);
  CHECK((p - sol.tail(2)).norm() <= 1e-10 * std::max(1.0, p.norm()));
}

TEST_CASE("ode_rhs scalar unconstrained case", "[leray]") {
  QuadDaeModel s;
  s.E11 = Matrix::Identity(1, 1);
  s.A11 = Matrix::Zero(1, 1);
  s.A12 = Matrix(1, 0);
  s.H = Matrix::Constant(1, 1, -1.0);
  s.B1 = Matrix(1, 0);
  CHECK(ode_rhs(s, Vector::Ones(1), Vector(0))(0) == Approx(-1.0));
}

TEST_CASE("velocity decomposition", "[leray]") {
  QuadDaeModel m = axis_model();
  m.Bperp(0, 0) = -2.0;
  const LerayProjector proj(m);
  Vector v(2);
  v << 2, 5;
  auto [v_top, v_perp] = decompose_velocity(m, proj, v, 1.0);
  CHECK(v_perp.isApprox(Vector{{2, 0}}));
  CHECK(v_top.isApprox(Vector{{0, 5}}));
  CHECK((m.A12.transpose() * v_top).norm() <= 1e-14);

  QuadDaeModel hom = axis_model();
  auto [t2, p2] = decompose_velocity(hom, LerayProjector(hom), v, 1.0);
  CHECK(p2.isZero());
}

TEST_CASE("corrected operators, scalar expansion", "[leray]") {
  // N = H (I (x) s + s (x) I) and c2 = H (s (x) s) for r = 1, h = 3, s = 2
  const Matrix h = Matrix::Constant(1, 1, 3.0);
  const Vector s = Vector::Constant(1, 2.0);
  CHECK(apply_quadratic_pair(h, Vector::Ones(1), s)(0) == Approx(12.0));
  CHECK(apply_quadratic(h, s)(0) == Approx(12.0));
}

TEST_CASE("corrected operators satisfy the bilinear expansion", "[leray]") {
  QuadDaeModel m = random_demo(17, 5, 1, 1);
  m.Bperp(0, 0) = 0.7;
  const LerayProjector proj(m);
  const CorrectedOperators corr = corrected_operators(m, proj);

  QuadDaeModel zero_h = m;
  zero_h.H.setZero();
  const CorrectedOperators corr0 = corrected_operators(zero_h, proj);
  CHECK(corr0.N.isZero());
  CHECK(corr0.c2.isZero());

  NormalStream rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector v = rng.matrix(5, 1).col(0);
    const double uperp = rng.matrix(1, 1)(0, 0);
    const Vector lhs = apply_quadratic(m.H, (v + corr.s_perp * uperp).eval());
    const Vector rhs = apply_quadratic(m.H, v) + corr.N * v * uperp + corr.c2 * uperp * uperp;
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, lhs.norm()));
  }

  QuadDaeModel hom = random_demo(17, 5, 1, 1);
  hom.Bperp = Matrix();
  CHECK_THROWS_AS(corrected_operators(hom, LerayProjector(hom)), std::invalid_argument);
}

TEST_CASE("empirical divergence-free projector", "[leray]") {
  Matrix snap(2, 1);
  snap << 1, 0;
  const EmpiricalProjector p1 = empirical_divfree_projector(snap);
  CHECK(p1.apply(Vector{{3, 4}}).isApprox(Vector{{0, 4}}));

  Matrix parallel(3, 2);
  parallel << 1, 2, 1, 2, 0, 0;
  CHECK(empirical_divfree_projector(parallel).Q.cols() == 1);

  const EmpiricalProjector pz = empirical_divfree_projector(Matrix::Zero(3, 4));
  CHECK(pz.Q.cols() == 0);
  CHECK(pz.apply(Vector{{1, 2, 3}}).isApprox(Vector{{1, 2, 3}}));

  NormalStream rng(77);
  const Matrix snaps = rng.matrix(6, 3);
  const EmpiricalProjector pr = empirical_divfree_projector(snaps);
  for (Index k = 0; k < snaps.cols(); ++k) {
    CHECK(pr.apply(Vector(snaps.col(k))).norm() <= 1e-10 * snaps.col(k).norm());
  }
  CHECK((pr.Q.transpose() * pr.Q - Matrix::Identity(pr.Q.cols(), pr.Q.cols())).norm() <= 1e-10);
}
