#ifndef ESORL_ORACLE_HPP_
#define ESORL_ORACLE_HPP_

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "esorl/basis.hpp"
#include "esorl/core.hpp"
#include "esorl/dynamics.hpp"

namespace esorl {

/**
 * Closed-form optimal pair for a benchmark system: ideal weights for a
 * declared basis plus the value function and policy they represent.
 */
struct AnalyticSolution {
  Vec theta_star;
  std::function<double(const Vec&)> V_star;
  std::function<double(const Vec&)> u0_star;
  std::string basis_name;
};

// V_x(x) . [x_2..x_n, f0_sat + g0_sat u0(x)] + Q(x) + R u0(x)^2; zero iff the
// pair solves the nominal HJB equation at x.
inline double hjb_residual(const std::function<Vec(const Vec&)>& V_x,
                           const std::function<double(const Vec&)>& u0,
                           const NominalModel& model, const CostSpec& cost,
                           double eps, const Vec& x) {
  const int n = static_cast<int>(x.size());
  const auto [f0s, g0s] = nominal_eval(model, x, eps);
  const double u = u0(x);
  Vec drift(n);
  for (int i = 0; i + 1 < n; ++i) drift[i] = x[i + 1];
  drift[n - 1] = f0s + g0s * u;
  return V_x(x).dot(drift) + cost.Q(x) + cost.R * u * u;
}

struct LqrSolution {
  Mat P;
  Vec K;  // row gain, u = -K.dot(x)
  double residual_inf = 0.0;
  int iterations = 0;
};

namespace detail {

// Solve Acl^T P + P Acl = -C by vectorization; fine at the sizes used here.
// Column-stacked vec gives (I kron Acl^T + Acl^T kron I) vec(P) = vec(-C).
inline Mat lyapunov_solve(const Mat& Acl, const Mat& C) {
  const int n = static_cast<int>(Acl.rows());
  const Mat At = Acl.transpose();
  const Mat I = Mat::Identity(n, n);
  Mat Msys = Mat::Zero(n * n, n * n);
  for (int j = 0; j < n; ++j) Msys.block(j * n, j * n, n, n) = At;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Msys.block(i * n, j * n, n, n) += Acl(j, i) * I;
    }
  }
  Vec rhs(n * n);
  for (int j = 0; j < n; ++j) rhs.segment(j * n, n) = -C.col(j);
  const Vec vp = Msys.colPivHouseholderQr().solve(rhs);
  Mat P(n, n);
  for (int j = 0; j < n; ++j) P.col(j) = vp.segment(j * n, n);
  return 0.5 * (P + P.transpose());
}

inline bool all_stable(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A);
  for (int i = 0; i < A.rows(); ++i) {
    if (es.eigenvalues()[i].real() >= 0.0) return false;
  }
  return true;
}

// Single-input Ackermann placement at the given (conjugate-closed) pole set.
inline Vec ackermann(const Mat& A, const Vec& B,
                     const std::vector<std::complex<double>>& poles) {
  const int n = static_cast<int>(A.rows());
  Mat Cm(n, n);
  Vec col = B;
  for (int i = 0; i < n; ++i) {
    Cm.col(i) = col;
    col = A * col;
  }
  // Monic characteristic polynomial of the desired pole set.
  std::vector<std::complex<double>> c = {1.0};
  for (const auto& p : poles) {
    std::vector<std::complex<double>> nxt(c.size() + 1, 0.0);
    for (size_t i = 0; i < c.size(); ++i) {
      nxt[i] += c[i];
      nxt[i + 1] -= c[i] * p;
    }
    c = nxt;
  }
  // Coefficient c[m] multiplies s^(n-m), so A^k picks up c[n-k].
  Mat pA = Mat::Zero(n, n);
  Mat Apow = Mat::Identity(n, n);
  for (int k = 0; k <= n; ++k) {
    pA += c[n - k].real() * Apow;
    Apow = A * Apow;
  }
  Vec en = Vec::Zero(n);
  en[n - 1] = 1.0;
  return (en.transpose() * Cm.colPivHouseholderQr().solve(pA)).transpose();
}

// Mirror unstable eigenvalues into the left half-plane, retry with deeper
// shifts until A - B K0 is Hurwitz.
inline Vec initial_stabilizing_gain(const Mat& A, const Vec& B) {
  const int n = static_cast<int>(A.rows());
  if (all_stable(A)) return Vec::Zero(n);
  Eigen::EigenSolver<Mat> es(A);
  double delta = 1.0;
  for (int attempt = 0; attempt < 8; ++attempt, delta *= 2.0) {
    std::vector<std::complex<double>> poles;
    for (int i = 0; i < n; ++i) {
      std::complex<double> lam = es.eigenvalues()[i];
      if (lam.real() > -delta) {
        lam = {-std::max(std::abs(lam.real()), delta), lam.imag()};
      }
      poles.push_back(lam);
    }
    const Vec K = ackermann(A, B, poles);
    if (all_stable(A - B * K.transpose())) return K;
  }
  throw std::runtime_error("solve_lqr: no stabilizing initial gain found");
}

}  // namespace detail

// Kleinman policy iteration: successive Lyapunov solves converging to the
// stabilizing Riccati solution A^T P + P A - P B R^-1 B^T P + Qbar = 0.
inline LqrSolution solve_lqr(const Mat& A, const Vec& B, const Mat& Qbar,
                             double R) {
  if (R <= 0.0) throw std::invalid_argument("solve_lqr: R must be positive");
  const int n = static_cast<int>(A.rows());
  Vec K = detail::initial_stabilizing_gain(A, B);
  LqrSolution sol;
  for (int it = 0; it < 200; ++it) {
    const Mat Acl = A - B * K.transpose();
    const Mat C = Qbar + (R * K) * K.transpose();
    const Mat P = detail::lyapunov_solve(Acl, C);
    const Vec Knext = (P * B) / R;
    sol.P = P;
    sol.iterations = it + 1;
    if ((Knext - K).lpNorm<Eigen::Infinity>() < 1e-13) {
      K = Knext;
      break;
    }
    K = Knext;
  }
  sol.K = K;
  const Mat res = A.transpose() * sol.P + sol.P * A -
                  sol.P * B * B.transpose() * sol.P / R + Qbar;
  sol.residual_inf = res.cwiseAbs().maxCoeff();
  if (sol.residual_inf > 1e-10) {
    throw std::runtime_error("solve_lqr: Riccati residual above 1e-10");
  }
  return sol;
}

namespace detail {

inline void verify_solution(const AnalyticSolution& sol,
                            const std::function<Vec(const Vec&)>& V_x,
                            const NominalModel& model, const CostSpec& cost,
                            double eps,
                            const std::vector<std::array<double, 2>>& box) {
  std::mt19937_64 rng(0);
  const int n = static_cast<int>(box.size());
  for (int s = 0; s < 1000; ++s) {
    Vec x(n);
    for (int d = 0; d < n; ++d) {
      const double u01 = (rng() >> 11) * 0x1.0p-53;
      x[d] = box[d][0] + (box[d][1] - box[d][0]) * u01;
    }
    if (std::abs(hjb_residual(V_x, sol.u0_star, model, cost, eps, x)) > 1e-8) {
      throw std::logic_error("analytic solution fails its own HJB check");
    }
  }
}

}  // namespace detail

// Printed closed form for the first benchmark: V* = 1.5 x1^2 + 2 x1 x2 + x2^2,
// u0* = -(cos 2x1 + 2)(x1 + x2), ideal weights (1.5, 2, 1) in the quadratic basis.
inline AnalyticSolution example1_analytic(double eps = 0.02) {
  AnalyticSolution sol;
  sol.theta_star = Vec(3);
  sol.theta_star << 1.5, 2.0, 1.0;
  sol.basis_name = "quad2";
  sol.V_star = [](const Vec& x) {
    return 1.5 * x[0] * x[0] + 2.0 * x[0] * x[1] + x[1] * x[1];
  };
  sol.u0_star = [](const Vec& x) {
    return -(std::cos(2.0 * x[0]) + 2.0) * (x[0] + x[1]);
  };
  const auto V_x = [](const Vec& x) {
    Vec g(2);
    g << 3.0 * x[0] + 2.0 * x[1], 2.0 * x[0] + 2.0 * x[1];
    return g;
  };
  const ExampleSystem sys = make_example1();
  detail::verify_solution(sol, V_x, sys.model, sys.cost,
                          eps, {{-2.0, 2.0}, {-2.0, 2.0}});
  return sol;
}

// Riccati-derived solution for the second benchmark; weights arranged for the
// basis (x1^2, x2^2, x3^2, x1 x2, x1 x3, x2 x3) as
// (P11, P22, P33, 2P12, 2P13, 2P23).
inline AnalyticSolution example2_analytic(double eps = 0.01) {
  Mat A = Mat::Zero(3, 3);
  A(0, 1) = 1.0;
  A(1, 2) = 1.0;
  A(2, 1) = -10.0;
  A(2, 2) = -11.0;
  Vec B = Vec::Zero(3);
  B[2] = 10.0;
  const LqrSolution lqr = solve_lqr(A, B, Mat::Identity(3, 3), 1.0);
  const Mat P = lqr.P;
  AnalyticSolution sol;
  sol.theta_star = Vec(6);
  sol.theta_star << P(0, 0), P(1, 1), P(2, 2), 2.0 * P(0, 1), 2.0 * P(0, 2),
      2.0 * P(1, 2);
  sol.basis_name = "quad3";
  sol.V_star = [P](const Vec& x) { return x.dot(P * x); };
  const Vec K = lqr.K;
  sol.u0_star = [K](const Vec& x) { return -K.dot(x); };
  const auto V_x = [P](const Vec& x) { return Vec(2.0 * (P * x)); };
  const ExampleSystem sys = make_example2();
  detail::verify_solution(sol, V_x, sys.model, sys.cost, eps,
                          {{-1.0, 1.0}, {-1.0, 1.0}, {-5.0, 5.0}});
  return sol;
}

// (max componentwise deviation, Euclidean deviation) from the ideal weights.
inline std::pair<double, double> weight_error(const Vec& theta_hat,
                                              const AnalyticSolution& sol) {
  if (theta_hat.size() != sol.theta_star.size()) {
    throw std::invalid_argument("weight_error: basis size mismatch");
  }
  const Vec d = theta_hat - sol.theta_star;
  return {d.cwiseAbs().maxCoeff(), d.norm()};
}

}  // namespace esorl

#endif  // ESORL_ORACLE_HPP_
