#include "flowrom/pod.hpp"
#include "flowrom/simulate.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace flowrom;
using Catch::Approx;

TEST_CASE("pod basis of diagonal data", "[pod]") {
  Matrix snaps(2, 2);
  snaps << 2, 0, 0, 1;
  const PodBasis basis = pod_basis(snaps, 1);
  CHECK(std::abs(basis.vectors(0, 0)) == Approx(1.0));
  CHECK(basis.vectors(1, 0) == Approx(0.0).margin(1e-14));
  REQUIRE(basis.singular_values.size() == 2);
  CHECK(basis.singular_values(0) == Approx(2.0));
  CHECK(basis.singular_values(1) == Approx(1.0));
}

TEST_CASE("full-rank pod reproduces the snapshots", "[pod]") {
  NormalStream rng(5);
  const Matrix snaps = rng.matrix(4, 20);
  const PodBasis basis = pod_basis(snaps, 4);
  const Matrix& V = basis.vectors;
  CHECK((snaps - V * (V.transpose() * snaps)).norm() <= 1e-10 * snaps.norm());
  CHECK_THROWS_AS(pod_basis(snaps, 5), std::invalid_argument);
}

TEST_CASE("weighted pod is E11-orthonormal and optimal in the weighted norm", "[pod]") {
  Matrix e11 = Matrix::Zero(2, 2);
  e11.diagonal() << 4.0, 1.0;
  NormalStream rng(6);
  const Matrix snaps = rng.matrix(2, 12);
  const PodBasis basis = pod_basis(snaps, 1, &e11);
  const Matrix gram = basis.vectors.transpose() * e11 * basis.vectors;
  CHECK((gram - Matrix::Identity(1, 1)).norm() <= 1e-10);

  // optimality: the weighted projection error matches the singular-value tail
  const Matrix L = spd_factor(e11);
  const Matrix& V = basis.vectors;
  const Matrix proj = V * (V.transpose() * e11 * snaps);
  const double err2 = (L.transpose() * (snaps - proj)).squaredNorm();
  double tail = 0.0;
  for (Index i = 1; i < basis.singular_values.size(); ++i) tail += std::pow(basis.singular_values(i), 2);
  CHECK(err2 == Approx(tail).epsilon(1e-8));
}

TEST_CASE("pod truncation error equals the singular value tail", "[pod]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    NormalStream rng(seed);
    const Matrix snaps = rng.matrix(6, 25);
    const Index rank = numerical_rank(snaps);
    for (Index r = 1; r <= rank; ++r) {
      const PodBasis basis = pod_basis(snaps, r);
      const Matrix& V = basis.vectors;
      const double err2 = (snaps - V * (V.transpose() * snaps)).squaredNorm();
      double tail = 0.0;
      for (Index i = r; i < basis.singular_values.size(); ++i) tail += std::pow(basis.singular_values(i), 2);
      CHECK(std::abs(err2 - tail) <= 1e-8 * snaps.squaredNorm());
    }
  }
}

TEST_CASE("constraint residual diagnostics", "[pod]") {
  Matrix a12(2, 1);
  a12 << 1, 0;
  Matrix aligned(2, 1);
  aligned << 1, 0;
  CHECK(constraint_residual(a12, aligned) == Approx(1.0));
  CHECK(constraint_residual(Matrix(2, 0), aligned) == 0.0);
  CHECK_THROWS_AS(constraint_residual(a12, Matrix::Zero(2, 1)), std::invalid_argument);

  // a Leray-projected basis is divergence-free
  const QuadDaeModel m = random_demo(3, 6, 2, 1);
  const LerayProjector proj(m);
  NormalStream rng(9);
  Matrix cols = rng.matrix(6, 3);
  for (Index j = 0; j < 3; ++j) cols.col(j) = proj.apply(cols.col(j));
  Eigen::HouseholderQR<Matrix> qr(cols);
  const Matrix q = qr.householderQ() * Matrix::Identity(6, 3);
  CHECK(constraint_residual(m.A12, q) <= 1e-10);
}

TEST_CASE("project_snapshots basics", "[pod]") {
  PodBasis identity;
  identity.vectors = Matrix::Identity(3, 3);
  NormalStream rng(4);
  const Matrix snaps = rng.matrix(3, 7);
  CHECK(project_snapshots(identity, snaps).isApprox(snaps));

  PodBasis e1;
  e1.vectors = Matrix::Identity(3, 1);
  Matrix perp = Matrix::Zero(3, 1);
  perp(1, 0) = 5.0;
  CHECK(project_snapshots(e1, perp).isZero());

  // round trip for data in the span
  const PodBasis basis = pod_basis(snaps, 3);
  const Matrix x = basis.vectors * rng.matrix(3, 2);
  CHECK((basis.vectors * project_snapshots(basis, x) - x).norm() <= 1e-12 * x.norm());
}

TEST_CASE("galerkin reduction with the identity basis returns the originals", "[pod]") {
  const QuadDaeModel m = random_demo(8, 4, 1, 2);
  PodBasis identity;
  identity.vectors = Matrix::Identity(4, 4);
  const GalerkinReduced red = galerkin_reduce(m, identity);
  CHECK(red.E11.isApprox(m.E11, 1e-13));
  CHECK(red.A11.isApprox(m.A11, 1e-13));
  CHECK(red.B1.isApprox(m.B1, 1e-13));
  CHECK(red.H.isApprox(m.H, 1e-13));
}

TEST_CASE("galerkin reduction with a single unit vector extracts scalar blocks", "[pod]") {
  const QuadDaeModel m = random_demo(8, 4, 1, 2);
  PodBasis e1;
  e1.vectors = Matrix::Identity(4, 1);
  const GalerkinReduced red = galerkin_reduce(m, e1);
  CHECK(red.E11(0, 0) == Approx(m.E11(0, 0)));
  CHECK(red.A11(0, 0) == Approx(m.A11(0, 0)));
  CHECK(red.B1(0, 0) == Approx(m.B1(0, 0)));
  CHECK(red.H(0, 0) == Approx(m.H(0, quad_feature_index(4, 0, 0))));
}

TEST_CASE("reduced quadratic operator respects the mixed-product identity", "[pod]") {
  const QuadDaeModel m = random_demo(12, 5, 1, 1);
  NormalStream rng(2);
  const PodBasis basis = pod_basis(rng.matrix(5, 10), 3);
  const GalerkinReduced red = galerkin_reduce(m, basis);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector xhat = rng.matrix(3, 1).col(0);
    const Vector lhs = apply_quadratic(red.H, xhat);
    const Vector rhs = basis.vectors.transpose() * apply_quadratic(m.H, (basis.vectors * xhat).eval());
    CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("galerkin reduction nests", "[pod]") {
  const QuadDaeModel m = random_demo(14, 5, 1, 1);
  NormalStream rng(3);
  const PodBasis big = pod_basis(rng.matrix(5, 12), 4);
  PodBasis small;
  small.vectors = big.vectors.leftCols(2);
  small.singular_values = big.singular_values;
  const GalerkinReduced red_small = galerkin_reduce(m, small);
  const GalerkinReduced red_big = galerkin_reduce(m, big);
  CHECK((red_small.E11 - red_big.E11.topLeftCorner(2, 2)).norm() <= 1e-13);
  CHECK((red_small.A11 - red_big.A11.topLeftCorner(2, 2)).norm() <= 1e-13);
  CHECK((red_small.B1 - red_big.B1.topRows(2)).norm() <= 1e-13);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = i; j < 2; ++j) {
      const Index k_small = quad_feature_index(2, i, j);
      const Index k_big = quad_feature_index(4, i, j);
      CHECK((red_small.H.col(k_small) - red_big.H.col(k_big).head(2)).norm() <= 1e-13);
    }
  }
}

TEST_CASE("divergence-free correction", "[pod]") {
  const QuadDaeModel m = random_demo(19, 6, 2, 1);
  const LerayProjector proj(m);
  NormalStream rng(10);

  // already divergence-free: the span is preserved
  PodBasis df;
  {
    Matrix cols = rng.matrix(6, 2);
    for (Index j = 0; j < 2; ++j) cols.col(j) = proj.apply(cols.col(j));
    Eigen::BDCSVD<Matrix> svd(cols, Eigen::ComputeThinU);
    df.vectors = svd.matrixU().leftCols(2);
    df.singular_values = svd.singularValues();
  }
  const PodBasis corrected = divfree_correct(df, proj);
  REQUIRE(corrected.order() == 2);
  // principal angles between the spans are zero
  Eigen::BDCSVD<Matrix> overlap(corrected.vectors.transpose() * df.vectors);
  CHECK(overlap.singularValues().minCoeff() == Approx(1.0).epsilon(1e-10));

  // a pure constraint direction is dropped
  QuadDaeModel axis;
  axis.E11 = Matrix::Identity(2, 2);
  axis.A11 = -Matrix::Identity(2, 2);
  axis.A12 = Matrix(2, 1);
  axis.A12 << 1, 0;
  axis.H = Matrix::Zero(2, quad_feature_dim(2));
  axis.B1 = Matrix::Zero(2, 1);
  PodBasis full;
  full.vectors = Matrix::Identity(2, 2);
  full.singular_values = Vector::Ones(2);
  const PodBasis shrunk = divfree_correct(full, LerayProjector(axis));
  REQUIRE(shrunk.order() == 1);
  CHECK(std::abs(shrunk.vectors(1, 0)) == Approx(1.0));

  // a basis entirely inside the constraint range cannot be corrected
  PodBasis dead;
  dead.vectors = Matrix::Identity(2, 1);
  dead.singular_values = Vector::Ones(1);
  CHECK_THROWS_AS(divfree_correct(dead, LerayProjector(axis)), std::runtime_error);

  // corrected bases always satisfy the constraint
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const QuadDaeModel rm = random_demo(seed, 6, 2, 1);
    const LerayProjector rp(rm);
    PodBasis raw;
    raw.vectors = NormalStream(seed + 500).matrix(6, 3);
    Eigen::HouseholderQR<Matrix> qr(raw.vectors);
    raw.vectors = qr.householderQ() * Matrix::Identity(6, 3);
    raw.singular_values = Vector::Ones(3);
    const PodBasis fixed = divfree_correct(raw, rp);
    CHECK(constraint_residual(rm.A12, fixed) <= 1e-10);
  }
}
