#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "esorl/basis.hpp"

using esorl::Vec;

namespace {

// Finite-difference check of the analytic Jacobian.
void check_jacobian(const esorl::Basis& basis) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x(basis.n);
    for (int d = 0; d < basis.n; ++d) {
      x[d] = -2.0 + 4.0 * ((rng() >> 11) * 0x1.0p-53);
    }
    const esorl::Mat J = basis.phi_x(x);
    REQUIRE(J.rows() == basis.l);
    REQUIRE(J.cols() == basis.n);
    const double d = 1e-6;
    for (int c = 0; c < basis.n; ++c) {
      Vec xp = x, xm = x;
      xp[c] += d;
      xm[c] -= d;
      const Vec fd = (basis.phi(xp) - basis.phi(xm)) / (2.0 * d);
      CHECK((J.col(c) - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

}  // namespace

TEST_CASE("two-state quadratic basis values and Jacobian") {
  const auto b = esorl::make_basis("quad2");
  CHECK(b.l == 3);
  CHECK(b.n == 2);
  Vec x(2);
  x << 1.0, 2.0;
  const Vec phi = b.phi(x);
  CHECK(phi[0] == 1.0);
  CHECK(phi[1] == 2.0);
  CHECK(phi[2] == 4.0);
  const esorl::Mat J = b.phi_x(x);
  CHECK(J(0, 0) == 2.0);
  CHECK(J(0, 1) == 0.0);
  CHECK(J(1, 0) == 2.0);
  CHECK(J(1, 1) == 1.0);
  CHECK(J(2, 0) == 0.0);
  CHECK(J(2, 1) == 4.0);
  check_jacobian(b);
}

TEST_CASE("seven-term polynomial basis keeps its declared ordering") {
  const auto b = esorl::make_basis("poly7");
  CHECK(b.l == 7);
  CHECK(b.n == 2);
  Vec x(2);
  x << 2.0, 3.0;
  const Vec phi = b.phi(x);
  // (x1^2, x1^3, x2^2, x2^3, x1 x2, x1 x2^2, x1^2 x2)
  CHECK(phi[0] == 4.0);
  CHECK(phi[1] == 8.0);
  CHECK(phi[2] == 9.0);
  CHECK(phi[3] == 27.0);
  CHECK(phi[4] == 6.0);
  CHECK(phi[5] == 18.0);
  CHECK(phi[6] == 12.0);
  check_jacobian(b);
}

TEST_CASE("three-state quadratic basis covers all products once") {
  const auto b = esorl::make_basis("quad3");
  CHECK(b.l == 6);
  CHECK(b.n == 3);
  Vec x(3);
  x << 1.0, 2.0, 3.0;
  const Vec phi = b.phi(x);
  // (x1^2, x2^2, x3^2, x1 x2, x1 x3, x2 x3)
  CHECK(phi[0] == 1.0);
  CHECK(phi[1] == 4.0);
  CHECK(phi[2] == 9.0);
  CHECK(phi[3] == 2.0);
  CHECK(phi[4] == 3.0);
  CHECK(phi[5] == 6.0);
  const esorl::Mat J = b.phi_x(x);
  CHECK(J(2, 2) == 6.0);
  CHECK(J(4, 2) == 1.0);
  CHECK(J(5, 2) == 2.0);
  CHECK(J(0, 2) == 0.0);
  check_jacobian(b);
}

TEST_CASE("every basis vanishes at the origin") {
  for (const char* name : {"quad2", "poly7", "quad3"}) {
    const auto b = esorl::make_basis(name);
    CHECK(b.phi(Vec::Zero(b.n)).norm() == 0.0);
  }
}

TEST_CASE("unknown basis names are rejected") {
  CHECK_THROWS_AS(esorl::make_basis("rbf"), std::invalid_argument);
}
