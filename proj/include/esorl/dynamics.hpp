#ifndef ESORL_DYNAMICS_HPP_
#define ESORL_DYNAMICS_HPP_

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "esorl/core.hpp"
#include "esorl/saturation.hpp"

namespace esorl {

// True uncertain system in normal form:
//   xdot_i = x_{i+1},  xdot_n = f(x,z,w) + g(x,z,w) u,  zdot = f_z(x,z,w).
struct NormalFormPlant {
  int n = 0;
  int p = 0;
  std::function<double(const Vec&, const Vec&, double)> f;
  std::function<double(const Vec&, const Vec&, double)> g;
  std::function<Vec(const Vec&, const Vec&, double)> f_z;
  std::function<double(double)> disturbance;
  double disturbance_rate_bound = 0.0;
};

// Known nominal pair (f0, g0) with smooth-saturation bounds. g_floor keeps
// |g0_sat| away from zero so the compensation term stays well-defined.
struct NominalModel {
  std::function<double(const Vec&)> f0;
  std::function<double(const Vec&)> g0;
  double M_f = 1.0;
  double M_g = 1.0;
  double g_floor = 0.5;
};

struct CostSpec {
  std::function<double(const Vec&)> Q;
  double R = 1.0;
};

struct ExampleSystem {
  NormalFormPlant plant;
  NominalModel model;
  CostSpec cost;
};

struct PlantDeriv {
  Vec xdot;
  Vec zdot;
};

inline PlantDeriv plant_rhs(const NormalFormPlant& plant, const Vec& x, const Vec& z,
                            double u, double t) {
  if (x.size() != plant.n || z.size() != plant.p) {
    throw std::invalid_argument("plant_rhs: state dimension mismatch");
  }
  const double w = plant.disturbance(t);
  PlantDeriv d;
  d.xdot.resize(plant.n);
  for (int i = 0; i + 1 < plant.n; ++i) d.xdot[i] = x[i + 1];
  d.xdot[plant.n - 1] = plant.f(x, z, w) + plant.g(x, z, w) * u;
  d.zdot = plant.p > 0 ? plant.f_z(x, z, w) : Vec(0);
  return d;
}

// Saturated nominal pair: f0_sat = M_f s(f0/M_f);
// g0_sat = sign(g0) max(g_floor, M_g s(|g0|/M_g)).
inline std::pair<double, double> nominal_eval(const NominalModel& m, const Vec& x,
                                              double eps) {
  const double f0 = m.f0(x);
  const double g0 = m.g0(x);
  const double f0s = m.M_f * soft_sat(f0 / m.M_f, eps).s;
  const double gmag = m.M_g * soft_sat(std::abs(g0) / m.M_g, eps).s;
  const double g0s = (g0 < 0.0 ? -1.0 : 1.0) * std::max(m.g_floor, gmag);
  return {f0s, g0s};
}

// Ground-truth extended state x_{n+1} = (f - f0) + (g - g0) u. Diagnostic only;
// the controller never sees it.
inline double total_uncertainty(const NormalFormPlant& plant, const NominalModel& m,
                                const Vec& x, const Vec& z, double u, double t) {
  const double w = plant.disturbance(t);
  return (plant.f(x, z, w) - m.f0(x)) + (plant.g(x, z, w) - m.g0(x)) * u;
}

inline ExampleSystem make_example1() {
  ExampleSystem s;
  s.plant.n = 2;
  s.plant.p = 1;
  s.plant.f = [](const Vec& x, const Vec& z, double w) {
    const double g0 = std::cos(2.0 * x[0]) + 2.0;
    return -x[0] - 2.5 * x[1] + w + z[0] * z[0] + 0.5 * (x[0] + x[1]) * g0 * g0;
  };
  s.plant.g = [](const Vec& x, const Vec&, double w) {
    return std::cos(2.0 * x[0]) + 2.0 + std::sin(x[0]) * w;
  };
  s.plant.f_z = [](const Vec& x, const Vec& z, double w) {
    Vec zd(1);
    zd[0] = -(x[1] * x[1] + w * w) * z[0];
    return zd;
  };
  s.plant.disturbance = [](double t) { return 0.5 * std::sin(t); };
  s.plant.disturbance_rate_bound = 0.5;

  s.model.f0 = [](const Vec& x) {
    const double g0 = std::cos(2.0 * x[0]) + 2.0;
    return -x[0] - 1.5 * x[1] + 0.5 * (x[0] + x[1]) * g0 * g0;
  };
  s.model.g0 = [](const Vec& x) { return std::cos(2.0 * x[0]) + 2.0; };
  s.model.M_f = 6.5;
  s.model.M_g = 3.0;
  s.model.g_floor = 0.5;

  s.cost.Q = [](const Vec& x) {
    return 2.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + x[1] * x[1];
  };
  s.cost.R = 1.0;
  return s;
}

// Servo chain with first-order actuator lag, m=1, b=1, tau=0.1:
//   xdot_3 = -10 x_2 - 11 x_3 + 10 u + 10 w.
inline ExampleSystem make_example2() {
  ExampleSystem s;
  s.plant.n = 3;
  s.plant.p = 0;
  s.plant.f = [](const Vec& x, const Vec&, double w) {
    return -10.0 * x[1] - 11.0 * x[2] + 10.0 * w;
  };
  s.plant.g = [](const Vec&, const Vec&, double) { return 10.0; };
  s.plant.f_z = [](const Vec&, const Vec&, double) { return Vec(0); };
  s.plant.disturbance = [](double t) { return 0.2 * std::sin(t); };
  s.plant.disturbance_rate_bound = 0.2;

  s.model.f0 = [](const Vec& x) { return -10.0 * x[1] - 11.0 * x[2]; };
  s.model.g0 = [](const Vec&) { return 10.0; };
  s.model.M_f = 100.0;
  s.model.M_g = 12.0;
  s.model.g_floor = 1.0;

  s.cost.Q = [](const Vec& x) { return x.squaredNorm(); };
  s.cost.R = 1.0;
  return s;
}

inline ExampleSystem make_system(const std::string& name) {
  if (name == "example1") return make_example1();
  if (name == "example2") return make_example2();
  throw std::invalid_argument("unknown plant: " + name);
}

// Registry for programmatically added plants; names resolve here first.
inline std::map<std::string, std::function<ExampleSystem()>>& plant_registry() {
  static std::map<std::string, std::function<ExampleSystem()>> reg;
  return reg;
}

inline ExampleSystem lookup_system(const std::string& name) {
  auto& reg = plant_registry();
  auto it = reg.find(name);
  if (it != reg.end()) return it->second();
  return make_system(name);
}

}  // namespace esorl

#endif  // ESORL_DYNAMICS_HPP_
