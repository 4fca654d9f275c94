#ifndef ESORL_SIM_HPP_
#define ESORL_SIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "esorl/basis.hpp"
#include "esorl/controller.hpp"
#include "esorl/core.hpp"
#include "esorl/dynamics.hpp"
#include "esorl/learner.hpp"
#include "esorl/observer.hpp"

namespace esorl {

/**
 * Full closed-loop state. Flattened layout for the integrator:
 * [x | z | xhat | theta_v | theta_c | row-major Gamma].
 */
struct ClosedLoopState {
  Vec x;
  Vec z;
  Vec xhat;
  Vec theta_v;
  Vec theta_c;
  Mat Gamma;
};

struct LearnerConfig {
  Basis basis;
  ExtrapolationGrid grid;
  LearnerGains gains;
  int grid_stride = 1;  // 1 recomputes grid terms at every stage
};

struct SimConfig {
  double h = 1e-3;
  double T = 100.0;
  int record_stride = 1;
  Vec x0;
  Vec z0;
  Vec theta_v0;
  Vec theta_c0;
  Mat Gamma0;
};

struct TraceRecord {
  double t = 0.0;
  Vec x;
  Vec z;
  Vec xhat;
  Vec xbar;
  double u = 0.0;
  double u0_hat = 0.0;
  double comp = 0.0;
  double delta_t = 0.0;
  double a4_c = 0.0;
  double gamma_norm = 0.0;
  double gamma_lmin = 0.0;
  double gamma_asym = 0.0;  // ||Gamma - Gamma^T||_max, in-memory diagnostic
  double theta_gap = 0.0;   // ||theta_c - theta_v||
  double x_np1_true = 0.0;
  Vec eta;
  std::vector<int> sat_active;  // per observer channel
  Vec theta_v;                  // kept for the auxiliary weights file
  Vec theta_c;
};

struct RunStats {
  bool diverged = false;
  double diverge_time = 0.0;
  std::string diverge_what;
  std::int64_t steps = 0;
  double final_x_norm = 0.0;
  Vec final_x;
  Vec final_theta_v;
  Vec final_theta_c;
  double inf_a4 = 0.0;
  double max_gamma_norm = 0.0;
  double min_gamma_lmin = 0.0;
  double max_x_norm = 0.0;
  double max_gamma_asym = 0.0;
  double sup_G_t = 0.0;
  double max_G_i = 0.0;
  double ss_e1 = 0.0;       // sup |x_1 - xhat_1| over the last half
  double ss_ext_err = 0.0;  // sup |x_{n+1}true - xhat_{n+1}| over the last half
};

struct Trace {
  int n = 0, p = 0, l = 0;
  std::vector<TraceRecord> records;
  RunStats stats;
  std::vector<std::string> warnings;
};

inline int state_dim(int n, int p, int l) { return n + p + (n + 1) + 2 * l + l * l; }

inline Vec flatten(const ClosedLoopState& S) {
  const int n = static_cast<int>(S.x.size());
  const int p = static_cast<int>(S.z.size());
  const int l = static_cast<int>(S.theta_v.size());
  Vec s(state_dim(n, p, l));
  int off = 0;
  s.segment(off, n) = S.x; off += n;
  s.segment(off, p) = S.z; off += p;
  s.segment(off, n + 1) = S.xhat; off += n + 1;
  s.segment(off, l) = S.theta_v; off += l;
  s.segment(off, l) = S.theta_c; off += l;
  for (int i = 0; i < l; ++i) {
    s.segment(off + i * l, l) = S.Gamma.row(i).transpose();
  }
  return s;
}

inline ClosedLoopState unflatten(const Vec& s, int n, int p, int l) {
  if (s.size() != state_dim(n, p, l)) {
    throw std::invalid_argument("unflatten: length mismatch");
  }
  ClosedLoopState S;
  int off = 0;
  S.x = s.segment(off, n); off += n;
  S.z = s.segment(off, p); off += p;
  S.xhat = s.segment(off, n + 1); off += n + 1;
  S.theta_v = s.segment(off, l); off += l;
  S.theta_c = s.segment(off, l); off += l;
  S.Gamma.resize(l, l);
  for (int i = 0; i < l; ++i) {
    S.Gamma.row(i) = s.segment(off + i * l, l).transpose();
  }
  return S;
}

// Classical 4-stage step; every stage must stay finite.
template <class Rhs>
inline Vec rk4_step(Rhs&& rhs, const Vec& s, double t, double h) {
  if (h <= 0.0) throw std::invalid_argument("rk4_step: h must be positive");
  const Vec k1 = rhs(s, t);
  const Vec k2 = rhs(s + 0.5 * h * k1, t + 0.5 * h);
  const Vec k3 = rhs(s + 0.5 * h * k2, t + 0.5 * h);
  const Vec k4 = rhs(s + h * k3, t + h);
  const Vec out = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  const Vec* stages[4] = {&k1, &k2, &k3, &k4};
  for (int i = 0; i < 4; ++i) {
    if (!stages[i]->allFinite()) {
      throw std::runtime_error("rk4_step: non-finite stage " +
                               std::to_string(i + 1) + " at t=" +
                               std::to_string(t));
    }
  }
  return out;
}

/**
 * Assembles the coupled plant/observer/learner right side over the flattened
 * state. Grid terms either recompute per evaluation or reuse a snapshot held
 * across a step block; the Gamma growth indicator is always supplied frozen
 * by the caller.
 */
class ClosedLoop {
 public:
  ClosedLoop(const NormalFormPlant& plant, const NominalModel& model,
             const CostSpec& cost, const EsoConfig& eso,
             const LearnerConfig& learner)
      : plant_(plant),
        model_(model),
        cost_(cost),
        eso_(eso),
        learner_(learner),
        ws_(build_grid_workspace(learner.grid, learner.basis, model, cost,
                                 eso.epsilon)) {
    n_ = plant.n;
    p_ = plant.p;
    l_ = learner.basis.l;
    if (eso.L.size() != n_ + 1 || eso.M.size() != n_ + 1) {
      throw std::invalid_argument("closed loop: observer gain/bound length");
    }
  }

  int n() const { return n_; }
  int p() const { return p_; }
  int l() const { return l_; }
  const GridWorkspace& workspace() const { return ws_; }

  // Derivative of the flattened state; held != nullptr reuses snapshot grid terms.
  Vec rhs(const Vec& s, double t, bool gamma_active, const GridEval* held) {
    ClosedLoopState S = unflatten(s, n_, p_, l_);
    const EsoState est{S.xhat};
    const Vec xbar = saturate_outputs(est, eso_);
    const ControlSample cs =
        control(xbar, S.theta_c, learner_.basis, model_, cost_.R, eso_.epsilon);

    const PlantDeriv pd = plant_rhs(plant_, S.x, S.z, cs.u, t);
    const Vec od = eso_rhs(est, S.x[0], cs.u, model_, eso_);

    const Vec xs = xbar.head(n_);
    const Vec mu = regressor(xs, S.theta_c, learner_.basis, model_, cost_.R,
                             eso_.epsilon);
    const double rho_t = rho(mu, S.Gamma, learner_.gains.gamma);
    const double delta_t =
        mu.dot(S.theta_v) + cost_.Q(xs) + cost_.R * cs.u0_hat * cs.u0_hat;
    const Mat G_t = g_matrix(xs, learner_.basis, model_, cost_.R, eso_.epsilon);

    const GridEval* terms = held;
    if (terms == nullptr) {
      eval_grid_terms(ws_, S.theta_v, S.theta_c, S.Gamma, learner_.gains,
                      cost_.R, scratch_);
      terms = &scratch_;
    }

    const CriticState critic{S.theta_v, S.Gamma};
    const ActorState actor{S.theta_c};
    const Vec dtv = critic_rhs(critic, delta_t, mu, rho_t, *terms, learner_.gains);
    const Mat dG = gamma_rhs(S.Gamma, mu, rho_t, learner_.gains, gamma_active);
    const Vec dtc = actor_rhs(actor, critic, mu, rho_t, G_t, *terms, ws_,
                              learner_.gains, cost_.R);

    Vec ds(s.size());
    int off = 0;
    ds.segment(off, n_) = pd.xdot; off += n_;
    ds.segment(off, p_) = pd.zdot; off += p_;
    ds.segment(off, n_ + 1) = od; off += n_ + 1;
    ds.segment(off, l_) = dtv; off += l_;
    ds.segment(off, l_) = dtc; off += l_;
    for (int i = 0; i < l_; ++i) {
      ds.segment(off + i * l_, l_) = dG.row(i).transpose();
    }
    return ds;
  }

  TraceRecord record(const Vec& s, double t) {
    ClosedLoopState S = unflatten(s, n_, p_, l_);
    const EsoState est{S.xhat};
    TraceRecord r;
    r.t = t;
    r.x = S.x;
    r.z = S.z;
    r.xhat = S.xhat;
    r.xbar = saturate_outputs(est, eso_);
    const ControlSample cs = control(r.xbar, S.theta_c, learner_.basis, model_,
                                     cost_.R, eso_.epsilon);
    r.u = cs.u;
    r.u0_hat = cs.u0_hat;
    r.comp = cs.compensation;
    const Vec xs = r.xbar.head(n_);
    const Vec mu = regressor(xs, S.theta_c, learner_.basis, model_, cost_.R,
                             eso_.epsilon);
    r.delta_t = mu.dot(S.theta_v) + cost_.Q(xs) + cost_.R * cs.u0_hat * cs.u0_hat;
    eval_grid_terms(ws_, S.theta_v, S.theta_c, S.Gamma, learner_.gains, cost_.R,
                    scratch_);
    r.a4_c = a4_metric_from_terms(scratch_);
    r.gamma_norm = spectral_norm_sym(S.Gamma);
    r.gamma_lmin = lambda_min_sym(S.Gamma);
    r.gamma_asym = (S.Gamma - S.Gamma.transpose()).cwiseAbs().maxCoeff();
    r.theta_gap = (S.theta_c - S.theta_v).norm();
    r.x_np1_true = total_uncertainty(plant_, model_, S.x, S.z, cs.u, t);
    r.eta = scaled_error(S.x, r.x_np1_true, est, eso_.epsilon);
    r.sat_active.resize(n_ + 1);
    for (int i = 0; i <= n_; ++i) {
      r.sat_active[i] = std::abs(S.xhat[i]) > eso_.M[i] ? 1 : 0;
    }
    r.theta_v = S.theta_v;
    r.theta_c = S.theta_c;
    return r;
  }

  double g_t_norm(const Vec& s) {
    ClosedLoopState S = unflatten(s, n_, p_, l_);
    const Vec xbar = saturate_outputs(EsoState{S.xhat}, eso_);
    const Vec xs = xbar.head(n_);
    const auto [f0s, g0s] = nominal_eval(model_, xs, eso_.epsilon);
    (void)f0s;
    const Vec b = learner_.basis.phi_x(xs).col(n_ - 1);
    return g0s * g0s / cost_.R * b.squaredNorm();
  }

  const EsoConfig& eso() const { return eso_; }
  const LearnerConfig& learner() const { return learner_; }

  GridEval& scratch() { return scratch_; }

 private:
  int n_ = 0, p_ = 0, l_ = 0;
  NormalFormPlant plant_;
  NominalModel model_;
  CostSpec cost_;
  EsoConfig eso_;
  LearnerConfig learner_;
  GridWorkspace ws_;
  GridEval scratch_;
};

namespace detail {

inline void check_finite_state(const Vec& s, int n, int p, double t) {
  if (!s.allFinite()) {
    throw std::runtime_error("state non-finite at t=" + std::to_string(t));
  }
  const double mag = s.head(n + p + n + 1).cwiseAbs().maxCoeff();
  if (mag > 1e9) {
    throw std::runtime_error("state magnitude " + std::to_string(mag) +
                             " exceeds divergence bound at t=" +
                             std::to_string(t));
  }
}

}  // namespace detail

// Integrates t in [0,T] with fixed step h. The Gamma indicator is frozen at
// each step start; after each step Gamma is symmetrized and, if the growth
// law overshoots the sigma1 ball, rescaled back onto it (sliding realization
// of the projection).
inline Trace run(const NormalFormPlant& plant, const NominalModel& model,
                 const CostSpec& cost, const EsoConfig& eso,
                 const LearnerConfig& learner, const SimConfig& cfg) {
  const auto hw = hurwitz_check(eso.L);
  if (!hw.ok) {
    throw std::invalid_argument("observer gain vector is not Hurwitz");
  }
  if (cfg.h <= 0.0 || cfg.T <= 0.0 || cfg.record_stride < 1) {
    throw std::invalid_argument("sim config: h, T, record_stride must be positive");
  }
  if (cfg.h > eso.epsilon / 2.0) {
    throw std::invalid_argument("sim config: h must be <= epsilon/2");
  }

  ClosedLoop loop(plant, model, cost, eso, learner);
  const int n = loop.n(), p = loop.p(), l = loop.l();

  Trace trace;
  trace.n = n;
  trace.p = p;
  trace.l = l;
  if (cfg.h > eso.epsilon / 10.0) {
    trace.warnings.push_back("h above epsilon/10; observer dynamics marginally resolved");
  }

  ClosedLoopState S0;
  S0.x = cfg.x0;
  S0.z = cfg.z0;
  S0.xhat = eso.initial.size() == n + 1 ? eso.initial : Vec::Zero(n + 1);
  S0.theta_v = cfg.theta_v0;
  S0.theta_c = cfg.theta_c0;
  S0.Gamma = cfg.Gamma0;
  if (S0.x.size() != n || S0.z.size() != p || S0.theta_v.size() != l ||
      S0.theta_c.size() != l || S0.Gamma.rows() != l || S0.Gamma.cols() != l) {
    throw std::invalid_argument("sim config: initial condition dimensions");
  }

  Vec s = flatten(S0);
  const std::int64_t K = std::llround(cfg.T / cfg.h);
  const int rs = cfg.record_stride;
  const int gs = std::max(1, learner.grid_stride);

  GridEval held;
  const int gamma_off = n + p + (n + 1) + 2 * l;
  auto gamma_of = [&](const Vec& sv) {
    Mat G(l, l);
    for (int i = 0; i < l; ++i) G.row(i) = sv.segment(gamma_off + i * l, l).transpose();
    return G;
  };

  RunStats& st = trace.stats;
  st.inf_a4 = std::numeric_limits<double>::infinity();
  st.min_gamma_lmin = std::numeric_limits<double>::infinity();

  auto note_record = [&](const TraceRecord& r) {
    trace.records.push_back(r);
    if (r.a4_c < st.inf_a4) st.inf_a4 = r.a4_c;
    if (r.gamma_norm > st.max_gamma_norm) st.max_gamma_norm = r.gamma_norm;
    if (r.gamma_lmin < st.min_gamma_lmin) st.min_gamma_lmin = r.gamma_lmin;
    if (r.gamma_asym > st.max_gamma_asym) st.max_gamma_asym = r.gamma_asym;
    const double xn = r.x.norm();
    if (xn > st.max_x_norm) st.max_x_norm = xn;
    if (r.t >= cfg.T / 2.0) {
      st.ss_e1 = std::max(st.ss_e1, std::abs(r.x[0] - r.xhat[0]));
      st.ss_ext_err = std::max(st.ss_ext_err, std::abs(r.x_np1_true - r.xhat[n]));
    }
  };

  for (std::int64_t k = 0; k <= K; ++k) {
    const double t = static_cast<double>(k) * cfg.h;
    if (k % rs == 0) {
      note_record(loop.record(s, t));
      st.sup_G_t = std::max(st.sup_G_t, loop.g_t_norm(s));
    }
    if (k == K) break;

    const Mat Gk = gamma_of(s);
    const bool active = spectral_norm_sym(Gk) <= learner.gains.sigma1;
    const GridEval* held_ptr = nullptr;
    if (gs > 1) {
      if (k % gs == 0) {
        const ClosedLoopState Sk = unflatten(s, n, p, l);
        eval_grid_terms(loop.workspace(), Sk.theta_v, Sk.theta_c, Sk.Gamma,
                        learner.gains, cost.R, held);
      }
      held_ptr = &held;
    }

    try {
      s = rk4_step(
          [&](const Vec& sv, double tv) {
            return loop.rhs(sv, tv, active, held_ptr);
          },
          s, t, cfg.h);
      detail::check_finite_state(s, n, p, t + cfg.h);
    } catch (const std::exception& ex) {
      st.diverged = true;
      st.diverge_time = t;
      st.diverge_what = ex.what();
      break;
    }

    // Symmetrize, then slide back onto the norm ball if the step overshot.
    Mat G = gamma_of(s);
    G = 0.5 * (G + G.transpose());
    const double gn = spectral_norm_sym(G);
    if (gn > learner.gains.sigma1) G *= learner.gains.sigma1 / gn;
    for (int i = 0; i < l; ++i) {
      s.segment(gamma_off + i * l, l) = G.row(i).transpose();
    }
    st.steps = k + 1;
  }

  const ClosedLoopState Sf = unflatten(s, n, p, l);
  st.final_x = Sf.x;
  st.final_x_norm = Sf.x.norm();
  st.final_theta_v = Sf.theta_v;
  st.final_theta_c = Sf.theta_c;
  st.max_G_i = loop.workspace().max_G_norm;
  return trace;
}

inline Trace run(const ExampleSystem& sys, const EsoConfig& eso,
                 const LearnerConfig& learner, const SimConfig& cfg) {
  return run(sys.plant, sys.model, sys.cost, eso, learner, cfg);
}

}  // namespace esorl

#endif  // ESORL_SIM_HPP_
