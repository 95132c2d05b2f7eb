#include "flowrom/simulate.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace flowrom;
using Catch::Approx;

namespace {
QuadDaeModel scalar_model(double a, double h, double b) {
  QuadDaeModel m;
  m.E11 = Matrix::Identity(1, 1);
  m.A11 = Matrix::Constant(1, 1, a);
  m.A12 = Matrix(1, 0);
  m.H = Matrix::Constant(1, 1, h);
  m.B1 = Matrix::Constant(1, 1, b);
  return m;
}
}  // namespace

TEST_CASE("imex euler scalar steps", "[simulate]") {
  // implicit linear part: v1 = v0 / (1 + dt)
  const SnapshotSet s1 = imex_euler_dae(scalar_model(-1.0, 0.0, 0.0), Vector::Ones(1), zero_input(1),
                                        zero_scalar(), TimeGrid(0.0, 0.5, 1));
  CHECK(s1.V(0, 1) == Approx(2.0 / 3.0));

  // explicit quadratic part: v1 = v0 - dt v0^2
  const SnapshotSet s2 = imex_euler_dae(scalar_model(0.0, -1.0, 0.0), Vector::Ones(1), zero_input(1),
                                        zero_scalar(), TimeGrid(0.0, 0.1, 1));
  CHECK(s2.V(0, 1) == Approx(0.9));
}

TEST_CASE("imex euler keeps homogeneous trajectories on the constraint", "[simulate]") {
  const QuadDaeModel m = random_demo(0, 4, 1, 1);
  const InputSampler u = [](double t) { return Vector::Constant(1, std::sin(2 * t) * std::exp(-0.05 * t)); };
  const SnapshotSet snaps = imex_euler_dae(m, Vector::Zero(4), u, zero_scalar(), TimeGrid(0.0, 2.0, 128));
  for (Index k = 0; k <= 128; ++k) {
    const double res = (m.A12.transpose() * snaps.V.col(k)).norm();
    CHECK(res <= 1e-10 * std::max(1.0, snaps.V.col(k).norm()));
  }
}

TEST_CASE("imex euler converges at first order", "[simulate]") {
  const QuadDaeModel m = random_demo(2, 4, 1, 1);
  const InputSampler u = [](double t) { return Vector::Constant(1, std::sin(2 * t) * std::exp(-0.05 * t)); };
  auto end_state = [&](Index steps) {
    return Vector(imex_euler_dae(m, Vector::Zero(4), u, zero_scalar(), TimeGrid(0.0, 1.0, steps)).V.col(steps));
  };
  const Vector ref = end_state(4096);  // fine-grid reference
  const double e1 = (end_state(64) - ref).norm();
  const double e2 = (end_state(128) - ref).norm();
  CHECK(e1 / e2 >= 1.7);
  CHECK(e1 / e2 <= 2.3);
}

TEST_CASE("rk4 single step matches the 4th-order Taylor polynomial", "[simulate]") {
  const Matrix x = integrate_ode([](const Vector& v, double) { return Vector(-v); }, Vector::Ones(1),
                                 TimeGrid(0.0, 0.1, 1));
  CHECK(x(0, 1) == Approx(0.9048375).epsilon(1e-12));

  const Matrix constant = integrate_ode([](const Vector& v, double) { return Vector(Vector::Zero(1)); },
                                        Vector::Ones(1), TimeGrid(0.0, 1.0, 10));
  CHECK(constant.row(0).isApproxToConstant(1.0));
}

TEST_CASE("rk4 shows 4th-order convergence", "[simulate]") {
  auto decay_err = [](Index steps) {
    const Matrix x = integrate_ode([](const Vector& v, double) { return Vector(-v); }, Vector::Ones(1),
                                   TimeGrid(0.0, 1.0, steps));
    return std::abs(x(0, steps) - std::exp(-1.0));
  };
  const double ratio = decay_err(100) / decay_err(200);
  CHECK(ratio >= 14.0);
  CHECK(ratio <= 18.0);
}

TEST_CASE("stokes steady state", "[simulate]") {
  CHECK(stokes_steady(scalar_model(-1.0, 0.0, 1.0), Vector::Ones(1)).first(0) == Approx(1.0));

  const QuadDaeModel m = random_demo(9, 5, 2, 1);
  auto [v0_zero, p0_zero] = stokes_steady(m, Vector::Zero(1));
  CHECK(v0_zero.isZero());
  CHECK(p0_zero.isZero());

  QuadDaeModel f = random_demo(9, 5, 2, 1);
  f.Bperp = Matrix::Constant(2, 1, 0.3);
  auto [v0, p0] = stokes_steady(f, Vector::Ones(1), 1.0);
  const Vector res = f.A12.transpose() * v0 + f.Bperp.col(0);
  CHECK(res.norm() <= 1e-10 * std::max(1.0, v0.norm()));
}

TEST_CASE("derivative estimator is exact on low-order polynomials", "[simulate]") {
  const double dt = 0.1;
  const Index n = 9;
  Matrix X(2, n);
  for (Index k = 0; k < n; ++k) {
    const double t = dt * static_cast<double>(k);
    X(0, k) = t * t;           // derivative 2t
    X(1, k) = 1.0;             // derivative 0
  }
  const Matrix D = estimate_derivatives(X, dt);
  CHECK(D(0, 2) == Approx(0.4).margin(1e-12));  // t = 0.2
  CHECK(D.row(1).norm() <= 1e-12);

  // degree-4 exactness everywhere, including the one-sided boundary stencils
  Matrix Q(1, n);
  for (Index k = 0; k < n; ++k) {
    const double t = dt * static_cast<double>(k);
    Q(0, k) = 1 + t + t * t + t * t * t + t * t * t * t;
  }
  const Matrix DQ = estimate_derivatives(Q, dt);
  for (Index k = 0; k < n; ++k) {
    const double t = dt * static_cast<double>(k);
    const double exact = 1 + 2 * t + 3 * t * t + 4 * t * t * t;
    CHECK(DQ(0, k) == Approx(exact).margin(1e-10));
  }

  CHECK_THROWS_AS(estimate_derivatives(Matrix::Zero(1, 4), dt), std::invalid_argument);
}

TEST_CASE("derivative estimator reaches 4th-order accuracy on sin", "[simulate]") {
  auto max_err = [](double dt) {
    const Index n = static_cast<Index>(1.0 / dt) + 1;
    Matrix X(1, n);
    for (Index k = 0; k < n; ++k) X(0, k) = std::sin(dt * static_cast<double>(k));
    const Matrix D = estimate_derivatives(X, dt);
    double worst = 0.0;
    for (Index k = 0; k < n; ++k) {
      worst = std::max(worst, std::abs(D(0, k) - std::cos(dt * static_cast<double>(k))));
    }
    return worst;
  };
  CHECK(max_err(1e-2) <= 5e-9);
  CHECK(max_err(1e-2) / max_err(5e-3) >= 14.0);
}

TEST_CASE("reduced imex rollout reproduces the scalar implicit step", "[simulate]") {
  ReducedQuadModel rom;
  rom.A = Matrix::Constant(1, 1, -1.0);
  rom.H = Matrix::Zero(1, 1);
  rom.B = Matrix(1, 0);
  const Matrix X = imex_euler_reduced(rom, Vector::Ones(1), zero_input(0), zero_scalar(), TimeGrid(0.0, 0.5, 1));
  CHECK(X(0, 1) == Approx(2.0 / 3.0));
}
