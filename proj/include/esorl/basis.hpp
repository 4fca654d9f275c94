#ifndef ESORL_BASIS_HPP_
#define ESORL_BASIS_HPP_

#include <functional>
#include <stdexcept>
#include <string>

#include "esorl/core.hpp"

namespace esorl {

// Polynomial feature map phi with phi(0)=0 and analytic Jacobian phi_x (l x n).
struct Basis {
  int l = 0;
  int n = 0;
  std::string name;
  std::function<Vec(const Vec&)> phi;
  std::function<Mat(const Vec&)> phi_x;
};

// (x1^2, x1 x2, x2^2)
inline Basis make_quad2() {
  Basis b;
  b.l = 3;
  b.n = 2;
  b.name = "quad2";
  b.phi = [](const Vec& x) {
    Vec v(3);
    v << x[0] * x[0], x[0] * x[1], x[1] * x[1];
    return v;
  };
  b.phi_x = [](const Vec& x) {
    Mat J(3, 2);
    J << 2.0 * x[0], 0.0,
         x[1], x[0],
         0.0, 2.0 * x[1];
    return J;
  };
  return b;
}

// (x1^2, x1^3, x2^2, x2^3, x1 x2, x1 x2^2, x1^2 x2): the quadratic triple
// plus the odd cubic completions, for runs where the true basis is unknown.
inline Basis make_poly7() {
  Basis b;
  b.l = 7;
  b.n = 2;
  b.name = "poly7";
  b.phi = [](const Vec& x) {
    const double x1 = x[0], x2 = x[1];
    Vec v(7);
    v << x1 * x1, x1 * x1 * x1, x2 * x2, x2 * x2 * x2, x1 * x2, x1 * x2 * x2,
        x1 * x1 * x2;
    return v;
  };
  b.phi_x = [](const Vec& x) {
    const double x1 = x[0], x2 = x[1];
    Mat J(7, 2);
    J << 2.0 * x1, 0.0,
         3.0 * x1 * x1, 0.0,
         0.0, 2.0 * x2,
         0.0, 3.0 * x2 * x2,
         x2, x1,
         x2 * x2, 2.0 * x1 * x2,
         2.0 * x1 * x2, x1 * x1;
    return J;
  };
  return b;
}

// (x1^2, x2^2, x3^2, x1 x2, x1 x3, x2 x3)
inline Basis make_quad3() {
  Basis b;
  b.l = 6;
  b.n = 3;
  b.name = "quad3";
  b.phi = [](const Vec& x) {
    const double x1 = x[0], x2 = x[1], x3 = x[2];
    Vec v(6);
    v << x1 * x1, x2 * x2, x3 * x3, x1 * x2, x1 * x3, x2 * x3;
    return v;
  };
  b.phi_x = [](const Vec& x) {
    const double x1 = x[0], x2 = x[1], x3 = x[2];
    Mat J(6, 3);
    J << 2.0 * x1, 0.0, 0.0,
         0.0, 2.0 * x2, 0.0,
         0.0, 0.0, 2.0 * x3,
         x2, x1, 0.0,
         x3, 0.0, x1,
         0.0, x3, x2;
    return J;
  };
  return b;
}

inline Basis make_basis(const std::string& name) {
  if (name == "quad2") return make_quad2();
  if (name == "poly7") return make_poly7();
  if (name == "quad3") return make_quad3();
  throw std::invalid_argument("unknown basis: " + name);
}

}  // namespace esorl

#endif  // ESORL_BASIS_HPP_
