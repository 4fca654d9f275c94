#ifndef ESORL_LEARNER_HPP_
#define ESORL_LEARNER_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "esorl/basis.hpp"
#include "esorl/core.hpp"
#include "esorl/dynamics.hpp"

namespace esorl {

struct LearnerGains {
  double lambda_v1 = 1.0;
  double lambda_v2 = 5.0;
  double lambda_c1 = 100.0;
  double lambda_c2 = 0.1;
  double beta = 100.0;
  double gamma = 0.5;
  double sigma1 = 2000.0;  // gain-matrix saturation bound
};

struct CriticState {
  Vec theta_v;
  Mat Gamma;
};

struct ActorState {
  Vec theta_c;
};

struct ExtrapolationGrid {
  std::vector<Vec> points;
  int N() const { return static_cast<int>(points.size()); }
};

inline double spectral_norm_sym(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

inline double lambda_min_sym(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

// a^n uniformly spaced points per axis, endpoints included, last axis fastest.
inline ExtrapolationGrid make_grid(const std::vector<std::array<double, 2>>& box,
                                   int a) {
  if (a < 2) throw std::invalid_argument("make_grid: a must be >= 2");
  const int n = static_cast<int>(box.size());
  int N = 1;
  for (int d = 0; d < n; ++d) N *= a;
  ExtrapolationGrid grid;
  grid.points.reserve(N);
  std::vector<int> idx(n, 0);
  for (int k = 0; k < N; ++k) {
    Vec x(n);
    for (int d = 0; d < n; ++d) {
      x[d] = box[d][0] + (box[d][1] - box[d][0]) * idx[d] / (a - 1);
    }
    grid.points.push_back(x);
    for (int d = n - 1; d >= 0; --d) {
      if (++idx[d] < a) break;
      idx[d] = 0;
    }
  }
  return grid;
}

inline double value_hat(const Vec& x, const Vec& theta_v, const Basis& basis) {
  return theta_v.dot(basis.phi(x));
}

// u0_hat = -(1/2R) g0_sat(x) b(x)^T theta_c, b = d(phi)/dx_n.
inline double policy_hat(const Vec& x, const Vec& theta_c, const Basis& basis,
                         const NominalModel& model, double R, double eps) {
  const auto [f0s, g0s] = nominal_eval(model, x, eps);
  (void)f0s;
  const Vec b = basis.phi_x(x).col(basis.n - 1);
  return -g0s / (2.0 * R) * b.dot(theta_c);
}

// mu = phi_x(x) [x_2..x_n, f0_sat + g0_sat u0_hat]; same formula serves the
// current state and the extrapolation points.
inline Vec regressor(const Vec& x, const Vec& theta_c, const Basis& basis,
                     const NominalModel& model, double R, double eps) {
  const auto [f0s, g0s] = nominal_eval(model, x, eps);
  const Mat J = basis.phi_x(x);
  const Vec b = J.col(basis.n - 1);
  const double u0 = -g0s / (2.0 * R) * b.dot(theta_c);
  Vec drift(basis.n);
  for (int i = 0; i + 1 < basis.n; ++i) drift[i] = x[i + 1];
  drift[basis.n - 1] = f0s + g0s * u0;
  return J * drift;
}

inline double rho(const Vec& mu, const Mat& Gamma, double gamma) {
  return 1.0 + gamma * mu.dot(Gamma * mu);
}

// delta = mu^T theta_v + Q(x) + R u0_hat^2.
inline double bellman_error(const Vec& x, const Vec& theta_v, const Vec& theta_c,
                            const Basis& basis, const NominalModel& model,
                            const CostSpec& cost, double eps) {
  const Vec mu = regressor(x, theta_c, basis, model, cost.R, eps);
  const double u0 = policy_hat(x, theta_c, basis, model, cost.R, eps);
  return mu.dot(theta_v) + cost.Q(x) + cost.R * u0 * u0;
}

// G = (g0_sat^2/R) b b^T, rank <= 1 PSD.
inline Mat g_matrix(const Vec& x, const Basis& basis, const NominalModel& model,
                    double R, double eps) {
  const auto [f0s, g0s] = nominal_eval(model, x, eps);
  (void)f0s;
  const Vec b = basis.phi_x(x).col(basis.n - 1);
  return (g0s * g0s / R) * (b * b.transpose());
}

// Precomputed grid geometry: row i of A holds phi_x(x^i) applied to the chain
// shift, row i of B the d/dx_n column; both are theta-independent.
struct GridWorkspace {
  Mat A;       // N x l
  Mat B;       // N x l
  Vec f0;      // N
  Vec g0;      // N
  Vec Qv;      // N
  double max_G_norm = 0.0;  // max_i ||G_i||_2 = max_i (g0_i^2/R) |b_i|^2
};

inline GridWorkspace build_grid_workspace(const ExtrapolationGrid& grid,
                                          const Basis& basis,
                                          const NominalModel& model,
                                          const CostSpec& cost, double eps) {
  const int N = grid.N();
  const int l = basis.l;
  GridWorkspace ws;
  ws.A.resize(N, l);
  ws.B.resize(N, l);
  ws.f0.resize(N);
  ws.g0.resize(N);
  ws.Qv.resize(N);
  for (int i = 0; i < N; ++i) {
    const Vec& xi = grid.points[i];
    const Mat J = basis.phi_x(xi);
    Vec shift(basis.n);
    for (int d = 0; d + 1 < basis.n; ++d) shift[d] = xi[d + 1];
    shift[basis.n - 1] = 0.0;
    ws.A.row(i) = (J * shift).transpose();
    ws.B.row(i) = J.col(basis.n - 1).transpose();
    const auto [f0s, g0s] = nominal_eval(model, xi, eps);
    ws.f0[i] = f0s;
    ws.g0[i] = g0s;
    ws.Qv[i] = cost.Q(xi);
    const double gn = g0s * g0s / cost.R * ws.B.row(i).squaredNorm();
    if (gn > ws.max_G_norm) ws.max_G_norm = gn;
  }
  return ws;
}

// Per-evaluation grid quantities: mu_i rows, rho_i, delta_i, u0_i.
struct GridEval {
  Mat mu;     // N x l
  Vec rho;    // N
  Vec delta;  // N
  Vec u0;     // N
};

inline void eval_grid_terms(const GridWorkspace& ws, const Vec& theta_v,
                            const Vec& theta_c, const Mat& Gamma,
                            const LearnerGains& gains, double R, GridEval& out) {
  out.u0 = -(ws.g0.array() / (2.0 * R)) * (ws.B * theta_c).array();
  const Eigen::ArrayXd scal = ws.f0.array() + ws.g0.array() * out.u0.array();
  out.mu = ws.A + scal.matrix().asDiagonal() * ws.B;
  const Mat W = out.mu * Gamma;
  out.rho = 1.0 + gains.gamma * (W.array() * out.mu.array()).rowwise().sum();
  out.delta = out.mu * theta_v + ws.Qv +
              R * (out.u0.array() * out.u0.array()).matrix();
}

// thetadot_v = -lv1 Gamma (mu/rho) delta_t - (lv2/N) Gamma sum_i (mu_i/rho_i) delta_i.
inline Vec critic_rhs(const CriticState& critic, double delta_t, const Vec& mu,
                      double rho_t, const GridEval& terms,
                      const LearnerGains& gains) {
  const int N = static_cast<int>(terms.rho.size());
  if (N < 1) throw std::invalid_argument("critic_rhs: empty grid");
  const Vec grid_sum =
      terms.mu.transpose() * (terms.delta.array() / terms.rho.array()).matrix();
  return -gains.lambda_v1 * (critic.Gamma * mu) * (delta_t / rho_t) -
         (gains.lambda_v2 / N) * (critic.Gamma * grid_sum);
}

// Gammadot = (beta Gamma - lv1 Gamma mu mu^T Gamma / rho^2) 1{||Gamma|| <= sigma1};
// the simulator freezes the indicator at the step start.
inline Mat gamma_rhs(const Mat& Gamma, const Vec& mu, double rho_t,
                     const LearnerGains& gains, bool active) {
  if (!active) return Mat::Zero(Gamma.rows(), Gamma.cols());
  const Vec Gm = Gamma * mu;
  return gains.beta * Gamma -
         (gains.lambda_v1 / (rho_t * rho_t)) * (Gm * Gm.transpose());
}

inline Mat gamma_rhs(const Mat& Gamma, const Vec& mu, double rho_t,
                     const LearnerGains& gains) {
  return gamma_rhs(Gamma, mu, rho_t, gains,
                   spectral_norm_sym(Gamma) <= gains.sigma1);
}

// thetadot_c = -lc1 (theta_c - theta_v) - lc2 theta_c
//              + (lv1/(4 rho)) (mu^T theta_v) G_t^T theta_c
//              + sum_i (lv2/(4 N rho_i)) (mu_i^T theta_v) G_i^T theta_c,
// with G_i = (g0_i^2/R) b_i b_i^T taken from the workspace rows.
inline Vec actor_rhs(const ActorState& actor, const CriticState& critic,
                     const Vec& mu, double rho_t, const Mat& G_t,
                     const GridEval& terms, const GridWorkspace& ws,
                     const LearnerGains& gains, double R) {
  const int N = static_cast<int>(terms.rho.size());
  Vec d = -gains.lambda_c1 * (actor.theta_c - critic.theta_v) -
          gains.lambda_c2 * actor.theta_c +
          (gains.lambda_v1 / (4.0 * rho_t)) * mu.dot(critic.theta_v) *
              (G_t.transpose() * actor.theta_c);
  const Eigen::ArrayXd coef = (gains.lambda_v2 / (4.0 * N)) *
                              (terms.mu * critic.theta_v).array() /
                              terms.rho.array() *
                              (ws.g0.array() * ws.g0.array() / R) *
                              (ws.B * actor.theta_c).array();
  d += ws.B.transpose() * coef.matrix();
  return d;
}

// c = (1/N) lambda_min(sum_i mu_i mu_i^T / rho_i); clamped at zero against
// eigensolver roundoff.
inline double a4_metric_from_terms(const GridEval& terms) {
  const int N = static_cast<int>(terms.rho.size());
  const Mat S = terms.mu.transpose() *
                (terms.rho.array().inverse().matrix().asDiagonal() * terms.mu);
  const Mat Ssym = 0.5 * (S + S.transpose());
  return std::max(0.0, lambda_min_sym(Ssym)) / N;
}

inline double a4_metric(const ExtrapolationGrid& grid, const Vec& theta_c,
                        const Mat& Gamma, const Basis& basis,
                        const NominalModel& model, const CostSpec& cost,
                        double eps, const LearnerGains& gains) {
  if (grid.N() < 1) throw std::invalid_argument("a4_metric: empty grid");
  const GridWorkspace ws = build_grid_workspace(grid, basis, model, cost, eps);
  GridEval terms;
  eval_grid_terms(ws, Vec::Zero(basis.l), theta_c, Gamma, gains, cost.R, terms);
  return a4_metric_from_terms(terms);
}

// Measured surrogates feeding the gain-condition report.
struct ExcitationStats {
  double sigma0 = 0.0;    // min over the run of lambda_min(Gamma)
  double sup_G_t = 0.0;   // sup over visited states of ||G_t||
  double max_G_i = 0.0;   // max over grid of ||G_i||
  double inf_c = 0.0;     // inf over the run of the a4 metric
};

struct GainConditionReport {
  bool evaluable = false;
  double chi1 = 0.0;
  double beta_lhs = 0.0, beta_rhs = 0.0;
  double lv2_lhs = 0.0, lv2_rhs = 0.0;
  double lc1_lhs = 0.0, lc1_rhs = 0.0;
  bool beta_ok = false, lv2_ok = false, lc1_ok = false;
};

// Diagnostic only: checks beta > sigma1 chi1 |Theta| + sigma1 lc1,
// lv2 > 5 lv1/(4 c gamma sigma0), lc1 > 3 chi1 |Theta| with
// chi1 = (lv1 sup||G_t|| + lv2 max||G_i||)/(8 sqrt(gamma sigma0)).
inline GainConditionReport gain_condition_report(const LearnerGains& gains,
                                                 const Vec& theta_ref,
                                                 const ExcitationStats& st) {
  GainConditionReport rep;
  if (st.sigma0 <= 0.0 || st.inf_c <= 0.0) return rep;
  rep.evaluable = true;
  const double root = 8.0 * std::sqrt(gains.gamma * st.sigma0);
  rep.chi1 = gains.lambda_v1 / root * st.sup_G_t + gains.lambda_v2 / root * st.max_G_i;
  const double tn = theta_ref.norm();
  rep.beta_lhs = gains.beta;
  rep.beta_rhs = gains.sigma1 * rep.chi1 * tn + gains.sigma1 * gains.lambda_c1;
  rep.lv2_lhs = gains.lambda_v2;
  rep.lv2_rhs = 5.0 * gains.lambda_v1 / (4.0 * st.inf_c * gains.gamma * st.sigma0);
  rep.lc1_lhs = gains.lambda_c1;
  rep.lc1_rhs = 3.0 * rep.chi1 * tn;
  rep.beta_ok = rep.beta_lhs > rep.beta_rhs;
  rep.lv2_ok = rep.lv2_lhs > rep.lv2_rhs;
  rep.lc1_ok = rep.lc1_lhs > rep.lc1_rhs;
  return rep;
}

}  // namespace esorl

#endif  // ESORL_LEARNER_HPP_
