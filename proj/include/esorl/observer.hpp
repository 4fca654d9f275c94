#ifndef ESORL_OBSERVER_HPP_
#define ESORL_OBSERVER_HPP_

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "esorl/core.hpp"
#include "esorl/dynamics.hpp"
#include "esorl/saturation.hpp"

namespace esorl {

struct EsoConfig {
  Vec L;        // gains l_1..l_{n+1}
  double epsilon = 0.02;
  Vec M;        // output saturation bounds M_1..M_{n+1}
  Vec initial;  // xhat(0), defaults to zero
};

struct EsoState {
  Vec xhat;  // x̂_1..x̂_n plus the total-uncertainty estimate x̂_{n+1}
};

struct HurwitzReport {
  bool ok = false;
  std::vector<std::complex<double>> eigenvalues;
};

// Companion matrix with char poly s^{n+1} + l_1 s^n + ... + l_{n+1}; the
// observer error dynamics are Hurwitz iff all roots sit strictly left of
// -1e-12.
inline HurwitzReport hurwitz_check(const Vec& L) {
  const int m = static_cast<int>(L.size());
  Mat E = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    E(i, 0) = -L[i];
    if (i + 1 < m) E(i, i + 1) = 1.0;
  }
  Eigen::EigenSolver<Mat> es(E);
  HurwitzReport rep;
  rep.ok = true;
  for (int i = 0; i < m; ++i) {
    const std::complex<double> ev = es.eigenvalues()[i];
    rep.eigenvalues.push_back(ev);
    if (ev.real() >= -1e-12) rep.ok = false;
  }
  return rep;
}

// x̄_i = M_i s(x̂_i / M_i).
inline Vec saturate_outputs(const EsoState& st, const EsoConfig& cfg) {
  Vec xbar(st.xhat.size());
  for (int i = 0; i < st.xhat.size(); ++i) {
    xbar[i] = cfg.M[i] * soft_sat(st.xhat[i] / cfg.M[i], cfg.epsilon).s;
  }
  return xbar;
}

// Observer right side. The nominal pair is evaluated at the raw estimate;
// output saturation applies only downstream (controller and learner).
inline Vec eso_rhs(const EsoState& st, double y, double u, const NominalModel& model,
                   const EsoConfig& cfg) {
  const int np1 = static_cast<int>(st.xhat.size());
  const int n = np1 - 1;
  const double e1 = y - st.xhat[0];
  const auto [f0s, g0s] = nominal_eval(model, st.xhat.head(n), cfg.epsilon);
  Vec d(np1);
  double epow = cfg.epsilon;
  for (int i = 0; i < n - 1; ++i) {
    d[i] = st.xhat[i + 1] + cfg.L[i] / epow * e1;
    epow *= cfg.epsilon;
  }
  d[n - 1] = st.xhat[n] + cfg.L[n - 1] / epow * e1 + f0s + g0s * u;
  epow *= cfg.epsilon;
  d[n] = cfg.L[n] / epow * e1;
  for (int i = 0; i < np1; ++i) {
    if (!std::isfinite(d[i])) {
      throw std::runtime_error("eso_rhs: non-finite derivative");
    }
  }
  return d;
}

// eta_i = (x_i - x̂_i)/eps^{n+1-i}; the extended entry uses the supplied
// ground-truth x_{n+1}.
inline Vec scaled_error(const Vec& x, double x_np1_true, const EsoState& st,
                        double eps) {
  const int n = static_cast<int>(x.size());
  Vec eta(n + 1);
  for (int i = 0; i < n; ++i) {
    eta[i] = (x[i] - st.xhat[i]) / std::pow(eps, n + 1 - (i + 1));
  }
  eta[n] = x_np1_true - st.xhat[n];
  return eta;
}

}  // namespace esorl

#endif  // ESORL_OBSERVER_HPP_
