#ifndef ESORL_CONTROLLER_HPP_
#define ESORL_CONTROLLER_HPP_

#include <stdexcept>

#include "esorl/basis.hpp"
#include "esorl/core.hpp"
#include "esorl/dynamics.hpp"
#include "esorl/learner.hpp"

namespace esorl {

struct ControlSample {
  double u = 0.0;             // applied input
  double u0_hat = 0.0;        // learned nominal policy term
  double compensation = 0.0;  // -xbar_{n+1}/g0_sat, cancels the lumped uncertainty
};

// u = u0_hat(xbar_{1..n}) - xbar_{n+1}/g0_sat(xbar_{1..n});
// xbar is the output-saturated observer estimate, n+1 components.
inline ControlSample control(const Vec& xbar, const Vec& theta_c,
                             const Basis& basis, const NominalModel& model,
                             double R, double eps) {
  if (xbar.size() != basis.n + 1) {
    throw std::invalid_argument("control: xbar must have n+1 components");
  }
  const Vec xs = xbar.head(basis.n);
  const auto [f0s, g0s] = nominal_eval(model, xs, eps);
  (void)f0s;
  ControlSample out;
  out.u0_hat = policy_hat(xs, theta_c, basis, model, R, eps);
  out.compensation = -xbar[basis.n] / g0s;
  out.u = out.u0_hat + out.compensation;
  return out;
}

}  // namespace esorl

#endif  // ESORL_CONTROLLER_HPP_
