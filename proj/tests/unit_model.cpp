#include "flowrom/model.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace flowrom;
using Catch::Approx;

namespace {
QuadDaeModel tiny_model() {
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

TEST_CASE("validate accepts a well-posed model and reports S", "[model]") {
  const ValidationReport rep = validate(tiny_model());
  CHECK(rep.ok);
  CHECK(rep.e11_spd);
  CHECK(rep.a12_rank == 1);
  CHECK(rep.s_condition == Approx(1.0));  // S = [1]
}

TEST_CASE("validate rejects broken models", "[model]") {
  QuadDaeModel zero_col = tiny_model();
  zero_col.A12.setZero();
  CHECK_FALSE(validate(zero_col).ok);

  QuadDaeModel bad_mass = tiny_model();
  bad_mass.E11(1, 1) = -1.0;  // negative eigenvalue
  CHECK_FALSE(validate(bad_mass).ok);
  CHECK_THROWS_AS(require_valid(bad_mass), std::invalid_argument);
}

TEST_CASE("dae_rhs evaluates both residual parts", "[model]") {
  const QuadDaeModel m = tiny_model();
  auto [rd0, ra0] = dae_rhs(m, Vector::Zero(2), Vector::Zero(1), Vector::Zero(1));
  CHECK(rd0.isZero());
  CHECK(ra0.isZero());

  // scalar unconstrained case: A11 = -1, H = -1, B1 = 1, v = 1, u = 0
  QuadDaeModel s;
  s.E11 = Matrix::Identity(1, 1);
  s.A11 = -Matrix::Identity(1, 1);
  s.A12 = Matrix(1, 0);
  s.H = Matrix::Constant(1, 1, -1.0);
  s.B1 = Matrix::Identity(1, 1);
  auto [rd, ra] = dae_rhs(s, Vector::Ones(1), Vector(0), Vector::Zero(1));
  CHECK(rd(0) == Approx(-2.0));
  CHECK(ra.size() == 0);

  // feasible point: A12^T v = -Bperp uperp
  QuadDaeModel f = tiny_model();
  f.Bperp(0, 0) = -2.0;
  Vector v(2);
  v << 6, 1;  // A12^T v = 6, Bperp*uperp = -2*3 = -6
  auto [rdf, raf] = dae_rhs(f, v, Vector::Zero(1), Vector::Zero(1), 3.0);
  CHECK(raf.norm() <= 1e-14);
}

TEST_CASE("dae_rhs is linear in pressure and input", "[model]") {
  const QuadDaeModel m = random_demo(3, 5, 2, 2);
  NormalStream rng(99);
  const Vector v = rng.matrix(5, 1).col(0);
  const Vector p1 = rng.matrix(2, 1).col(0), p2 = rng.matrix(2, 1).col(0);
  const Vector u1 = rng.matrix(2, 1).col(0), u2 = rng.matrix(2, 1).col(0);
  auto [rd1, ra1] = dae_rhs(m, v, p1, u1);
  auto [rd2, ra2] = dae_rhs(m, v, p2, u2);
  auto [rd12, ra12] = dae_rhs(m, v, (p1 + p2).eval(), (u1 + u2).eval());
  auto [rd0, ra0] = dae_rhs(m, v, Vector::Zero(2), Vector::Zero(2));
  CHECK((rd12 - (rd1 + rd2 - rd0)).norm() == 0.0);  // superposition, exact
}

TEST_CASE("random_demo is deterministic", "[model]") {
  const QuadDaeModel a = random_demo(0, 4, 1, 1);
  const QuadDaeModel b = random_demo(0, 4, 1, 1);
  CHECK(a.E11 == b.E11);
  CHECK(a.A11 == b.A11);
  CHECK(a.A12 == b.A12);
  CHECK(a.H == b.H);
  CHECK(a.B1 == b.B1);
}

TEST_CASE("random_demo A11 is dissipative", "[model]") {
  const QuadDaeModel m = random_demo(0, 4, 1, 1);
  const Matrix sym = 0.5 * (m.A11 + m.A11.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  CHECK(eig.eigenvalues().maxCoeff() < 0.0);
}

TEST_CASE("random_demo validates across seeds", "[model]") {
  CHECK(validate(random_demo(7, 6, 2, 2)).ok);
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const QuadDaeModel m = random_demo(seed, 4, 1, 1);
    CHECK(validate(m).ok);
  }
  CHECK_THROWS_AS(random_demo(0, 2, 2, 1), std::invalid_argument);
}

TEST_CASE("snapshot set invariants", "[model]") {
  SnapshotSet s;
  s.times = Vector{{0.0, 0.1, 0.2}};
  s.V = Matrix::Zero(2, 3);
  REQUIRE_NOTHROW(s.check());
  CHECK(s.uniform());
  CHECK(s.uniform_dt() == Approx(0.1));

  s.times(2) = 0.25;
  CHECK_FALSE(s.uniform());

  s.V = Matrix::Zero(2, 4);
  CHECK_THROWS_AS(s.check(), std::invalid_argument);
}

TEST_CASE("reduced model rhs assembles optional terms", "[model]") {
  ReducedQuadModel rom;
  rom.A = Matrix::Constant(1, 1, 2.0);
  rom.H = Matrix::Constant(1, 1, 3.0);
  rom.B = Matrix::Constant(1, 1, 5.0);
  rom.c = Matrix::Constant(1, 1, 7.0);
  rom.N = Matrix::Constant(1, 1, 11.0);
  rom.K = Matrix::Constant(1, 1, 13.0);
  const Vector x = Vector::Constant(1, 2.0);
  const Vector u = Vector::Constant(1, 1.0);
  // 2*2 + 3*4 + 5*1 + 7 + 11*2*0.5 + 13*0.25
  CHECK(rom.rhs(x, u, 0.5, 0.25)(0) == Approx(4 + 12 + 5 + 7 + 11 + 3.25));
}
