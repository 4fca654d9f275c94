// End-to-end acceptance checks for the library and the bundled benchmark
// configurations. Each check prints one [PASS]/[FAIL] line; the process exits
// nonzero if any check fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "esorl/config.hpp"
#include "esorl/oracle.hpp"
#include "esorl/saturation.hpp"
#include "esorl/sim.hpp"
#include "esorl/trace_io.hpp"

namespace {

using esorl::Mat;
using esorl::Vec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

struct Criterion {
  int id;
  std::string label;
  bool pass;
  std::string detail;
};

std::vector<Criterion> g_results;

void report(int id, const std::string& label, bool pass,
            const std::string& detail) {
  g_results.push_back({id, label, pass, detail});
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}

esorl::ResolvedRun resolve_bundled(const std::string& name) {
  return esorl::resolve_config(esorl::load_config_text(name));
}

esorl::ResolvedRun resolve_variant(
    const std::string& name, const std::function<void(nlohmann::json&)>& edit) {
  auto doc = nlohmann::json::parse(esorl::load_config_text(name));
  edit(doc);
  return esorl::resolve_config(doc.dump());
}

struct NamedRun {
  std::string name;
  esorl::Trace trace;
};

esorl::Trace timed_run(const esorl::ResolvedRun& rr, const std::string& name,
                       std::vector<NamedRun>& all) {
  std::printf("  %-34s ", name.c_str());
  std::fflush(stdout);
  const auto t0 = Clock::now();
  esorl::Trace tr = esorl::run(rr.system, rr.observer, rr.learner, rr.sim);
  std::printf("%6.1f s   |x(T)| = %-11.3g%s\n", seconds_since(t0),
              tr.stats.final_x_norm, tr.stats.diverged ? "  DIVERGED" : "");
  all.push_back({name, tr});
  return all.back().trace;
}

int checker_exit_code() {
  const std::string cmd =
      std::string("\"") + ESORL_CLI_PATH + "\" verify-oracle > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_first_oracle() {
  const auto t0 = Clock::now();
  const auto sys = esorl::make_example1();
  const auto sol = esorl::example1_analytic();
  const auto basis = esorl::make_basis(sol.basis_name);
  const auto V_x = [&](const Vec& x) -> Vec {
    return basis.phi_x(x).transpose() * sol.theta_star;
  };
  std::mt19937_64 rng(0);
  double max_res = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec x(2);
    x[0] = uniform(rng, -2.0, 2.0);
    x[1] = uniform(rng, -2.0, 2.0);
    max_res = std::max(max_res, std::abs(esorl::hjb_residual(
                                    V_x, sol.u0_star, sys.model, sys.cost,
                                    0.02, x)));
  }
  const double dt = seconds_since(t0);
  const int cli = checker_exit_code();
  report(1, "closed-form value function solves the two-state optimality equation",
         max_res <= 1e-8 && dt < 1.0 && cli == 0,
         fmt("max residual %.3g (tol 1e-8) over 1000 samples, %.2f s, "
             "verify-oracle exit %d",
             max_res, dt, cli));
}

void check_second_oracle() {
  const auto t0 = Clock::now();
  const auto sol = esorl::example2_analytic();
  Vec printed(6);
  printed << 2.2669, 2.3580, 0.0470, 3.1390, 0.2, 0.2534;
  const double werr = esorl::weight_error(printed, sol).first;

  Mat A = Mat::Zero(3, 3);
  A(0, 1) = 1.0;
  A(1, 2) = 1.0;
  A(2, 1) = -10.0;
  A(2, 2) = -11.0;
  Vec B = Vec::Zero(3);
  B[2] = 10.0;
  const auto lqr = esorl::solve_lqr(A, B, Mat::Identity(3, 3), 1.0);
  Vec kref(3);
  kref << 1.0, 1.2669, 0.4695;
  const double kerr = (lqr.K - kref).cwiseAbs().maxCoeff();
  const double dt = seconds_since(t0);
  report(2, "three-state Riccati solve matches the published coefficients",
         werr <= 5e-3 && kerr <= 5e-3 && dt < 1.0,
         fmt("coefficient error %.3g, gain error %.3g (tol 5e-3), %.2f s", werr,
             kerr, dt));
}

void check_saturation_suite() {
  const auto t0 = Clock::now();
  const double eps = 0.02;
  std::mt19937_64 rng(8);
  double max_fd = 0.0, max_clamp_excess = -1.0;
  bool slope_ok = true, odd_ok = true;
  int points = 0;
  auto probe = [&](double v) {
    const auto r = esorl::soft_sat(v, eps);
    slope_ok = slope_ok && r.s_prime >= 0.0 && r.s_prime <= 1.0;
    const auto m = esorl::soft_sat(-v, eps);
    odd_ok = odd_ok && m.s == -r.s && m.s_prime == r.s_prime;
    max_clamp_excess = std::max(
        max_clamp_excess, std::abs(r.s - std::clamp(v, -1.0, 1.0)) - eps / 2.0);
    const double d = 1e-8;
    const double fd =
        (esorl::soft_sat(v + d, eps).s - esorl::soft_sat(v - d, eps).s) /
        (2.0 * d);
    max_fd = std::max(max_fd, std::abs(fd - r.s_prime));
    ++points;
  };
  for (double j : {1.0, -1.0, 1.0 + eps, -1.0 - eps}) {
    probe(j);
    probe(j + 1e-9);
    probe(j - 1e-9);
  }
  while (points < 10000) probe(uniform(rng, -3.0, 3.0));
  const double dt = seconds_since(t0);
  report(8, "saturation ramp is smooth, bounded, odd, and close to the clamp",
         max_fd <= 1e-6 && slope_ok && max_clamp_excess <= 1e-15 && odd_ok &&
             dt < 1.0,
         fmt("fd error %.3g (tol 1e-6), clamp excess %.3g, slope %s, odd %s, "
             "%d pts, %.2f s",
             max_fd, max_clamp_excess, slope_ok ? "in [0,1]" : "VIOLATED",
             odd_ok ? "exact" : "VIOLATED", points, dt));
}

void check_learning_equilibrium() {
  const auto sys = esorl::make_example1();
  const auto basis = esorl::make_basis("quad2");
  const Vec theta = (Vec(3) << 1.5, 2.0, 1.0).finished();
  const double eps = 0.02;
  const auto grid = esorl::make_grid({{-2.0, 2.0}, {-2.0, 2.0}}, 5);
  const auto ws =
      esorl::build_grid_workspace(grid, basis, sys.model, sys.cost, eps);
  esorl::LearnerGains gains;
  esorl::CriticState critic;
  critic.theta_v = theta;
  critic.Gamma = Mat::Identity(3, 3) * 100.0;
  esorl::GridEval terms;
  esorl::eval_grid_terms(ws, theta, theta, critic.Gamma, gains, sys.cost.R,
                         terms);

  std::mt19937_64 rng(9);
  double max_delta = 0.0, max_rhs = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vec x(2);
    x[0] = uniform(rng, -2.0, 2.0);
    x[1] = uniform(rng, -2.0, 2.0);
    const double dt = esorl::bellman_error(x, theta, theta, basis, sys.model,
                                           sys.cost, eps);
    max_delta = std::max(max_delta, std::abs(dt));
    const Vec mu =
        esorl::regressor(x, theta, basis, sys.model, sys.cost.R, eps);
    const double rho_t = esorl::rho(mu, critic.Gamma, gains.gamma);
    const Vec rhs = esorl::critic_rhs(critic, dt, mu, rho_t, terms, gains);
    max_rhs = std::max(max_rhs, rhs.norm());
  }
  report(9, "ideal weights are a stationary point of the critic update",
         max_delta <= 1e-9 && max_rhs <= 1e-8,
         fmt("max |delta_t| %.3g (tol 1e-9), max ||update|| %.3g (tol 1e-8) "
             "at 1000 states",
             max_delta, max_rhs));
}

}  // namespace

int main() {
  std::printf("acceptance suite: closed-loop learning benchmarks\n\n");

  check_first_oracle();
  check_second_oracle();
  check_saturation_suite();
  check_learning_equilibrium();

  std::printf("long runs:\n");
  std::vector<NamedRun> all;

  const auto rrA = resolve_bundled("example1_known_basis");
  const auto trA = timed_run(rrA, "example1 known basis", all);
  const auto trA2 = timed_run(rrA, "example1 known basis (replay)", all);
  const auto rrAh = resolve_variant("example1_known_basis", [](nlohmann::json& d) {
    d["sim"]["h"] = 0.0005;
    d["sim"]["record_stride"] = 200;
  });
  const auto trAh = timed_run(rrAh, "example1 known basis (h/2)", all);

  const auto trB2 = timed_run(resolve_bundled("example1_grid_2"),
                              "example1 2x2 grid", all);
  const auto trB3 = timed_run(resolve_bundled("example1_grid_3"),
                              "example1 3x3 grid", all);
  const auto trB9 = timed_run(resolve_bundled("example1_grid_9"),
                              "example1 9x9 grid", all);

  const auto trC = timed_run(resolve_bundled("example1_unknown_basis"),
                             "example1 7-term basis", all);

  const auto rrD04 = resolve_variant("example1_known_basis", [](nlohmann::json& d) {
    d["observer"]["epsilon"] = 0.04;
    d["sim"]["h"] = 0.002;
    d["sim"]["record_stride"] = 50;
  });
  const auto trD04 = timed_run(rrD04, "example1 eps=0.04", all);
  const auto rrD01 = resolve_variant("example1_known_basis", [](nlohmann::json& d) {
    d["observer"]["epsilon"] = 0.01;
    d["sim"]["h"] = 0.0005;
    d["sim"]["record_stride"] = 200;
  });
  const auto trD01 = timed_run(rrD01, "example1 eps=0.01", all);

  const auto trE = timed_run(resolve_bundled("example2"), "example2", all);
  std::printf("\n");

  const auto sol1 = esorl::example1_analytic();

  // Known-basis convergence of the actor weights and the regulated state.
  {
    const double werr =
        trA.stats.diverged
            ? std::numeric_limits<double>::infinity()
            : esorl::weight_error(trA.stats.final_theta_c, sol1).first;
    report(3, "stock run learns the exact weights and regulates the state",
           !trA.stats.diverged && werr <= 0.15 && trA.stats.final_x_norm <= 0.1,
           fmt("weight error %.3g (tol 0.15), |x(T)| %.3g (tol 0.1)", werr,
               trA.stats.final_x_norm));
  }

  // Grid-size ablation: accuracy ordering plus the excitation threshold.
  {
    struct Entry {
      int a;
      const esorl::Trace* tr;
    };
    const std::vector<Entry> entries = {
        {2, &trB2}, {3, &trB3}, {5, &trA}, {9, &trB9}};
    std::vector<double> errs;
    bool ran = true;
    for (const auto& e : entries) {
      ran = ran && !e.tr->stats.diverged;
      errs.push_back(
          e.tr->stats.diverged
              ? std::numeric_limits<double>::infinity()
              : esorl::weight_error(e.tr->stats.final_theta_c, sol1).first);
    }
    bool ordering = true;
    for (size_t i = 1; i < errs.size(); ++i) {
      ordering = ordering && errs[i] <= 1.2 * errs[i - 1];
    }
    const bool coarse_fails = trB2.stats.inf_a4 <= 1e-3;
    const bool fine_holds = trB3.stats.inf_a4 > 1e-3 &&
                            trA.stats.inf_a4 > 1e-3 &&
                            trB9.stats.inf_a4 > 1e-3;
    report(4, "denser grids learn no worse and excite the regressor span",
           ran && ordering && coarse_fails && fine_holds,
           fmt("weight errors (a=2,3,5,9): %.3g, %.3g, %.3g, %.3g; "
               "min excitation: %.3g, %.3g, %.3g, %.3g (threshold 1e-3)",
               errs[0], errs[1], errs[2], errs[3], trB2.stats.inf_a4,
               trB3.stats.inf_a4, trA.stats.inf_a4, trB9.stats.inf_a4));
  }

  // Overparameterized basis: spurious terms die out, true terms survive.
  {
    Vec target(7);
    target << 1.5, 0.0, 1.0, 0.0, 2.0, 0.0, 0.0;
    double worst = 0.0;
    if (trC.stats.diverged) {
      worst = std::numeric_limits<double>::infinity();
    } else {
      worst = (trC.stats.final_theta_c - target).cwiseAbs().maxCoeff();
    }
    report(5, "redundant basis terms vanish while the true ones converge",
           !trC.stats.diverged && worst <= 0.2,
           fmt("max weight deviation %.3g (tol 0.2) after the long run", worst));
  }

  // Observer accuracy improves as the bandwidth parameter shrinks.
  {
    const double s04 = trD04.stats.ss_ext_err;
    const double s02 = trA.stats.ss_ext_err;
    const double s01 = trD01.stats.ss_ext_err;
    const bool dec = s04 > s02 && s02 > s01;
    report(6, "uncertainty-estimate error shrinks with the observer scale",
           dec && !trD04.stats.diverged && !trD01.stats.diverged,
           fmt("steady-state sup errors: %.3g (0.04) > %.3g (0.02) > %.3g "
               "(0.01); output errors %.3g/%.3g/%.3g vs 10*eps^3 = "
               "6.4e-4/8e-5/1e-5 (informational)",
               s04, s02, s01, trD04.stats.ss_e1, trA.stats.ss_e1,
               trD01.stats.ss_e1));
  }

  // Gain matrix invariants across every collected run.
  {
    bool ok = true;
    std::string worst_name = "-";
    double worst_norm = 0.0, worst_lmin = std::numeric_limits<double>::infinity(),
           worst_asym = 0.0;
    for (const auto& nr : all) {
      const auto& st = nr.trace.stats;
      if (st.max_gamma_norm > worst_norm) {
        worst_norm = st.max_gamma_norm;
        worst_name = nr.name;
      }
      worst_lmin = std::min(worst_lmin, st.min_gamma_lmin);
      worst_asym = std::max(worst_asym, st.max_gamma_asym);
      ok = ok && st.max_gamma_norm <= 2000.0 * (1.0 + 1e-6) &&
           st.min_gamma_lmin > 0.0 && st.max_gamma_asym <= 1e-10;
    }
    report(7, "adaptation gain stays on its ball, positive and symmetric",
           ok,
           fmt("max ||Gamma|| %.10g (bound 2000*(1+1e-6), run: %s), min "
               "eigenvalue %.3g, max asymmetry %.3g over %zu runs",
               worst_norm, worst_name.c_str(), worst_lmin, worst_asym,
               all.size()));
  }

  // Determinism and integrator order.
  {
    bool bitwise = trA.records.size() == trA2.records.size();
    if (bitwise) {
      for (size_t i = 0; i < trA.records.size(); ++i) {
        const auto& a = trA.records[i];
        const auto& b = trA2.records[i];
        bitwise = bitwise && a.t == b.t && a.u == b.u && a.x == b.x &&
                  a.xhat == b.xhat && a.theta_c == b.theta_c &&
                  a.gamma_norm == b.gamma_norm;
      }
    }
    const fs::path tmp = fs::temp_directory_path() / "esorl_acceptance";
    fs::create_directories(tmp);
    esorl::write_trace(trA, (tmp / "run1.csv").string());
    esorl::write_trace(trA2, (tmp / "run2.csv").string());
    const bool bytes_equal =
        slurp(tmp / "run1.csv") == slurp(tmp / "run2.csv");
    const double step_diff =
        (trA.stats.final_x - trAh.stats.final_x).cwiseAbs().maxCoeff();
    report(10, "replays are bit-identical and the step size is resolved",
           bitwise && bytes_equal && step_diff <= 1e-4,
           fmt("replay %s, trace files %s, half-step final-state shift %.3g "
               "(tol 1e-4)",
               bitwise ? "bit-identical" : "DIFFERS",
               bytes_equal ? "byte-identical" : "DIFFER", step_diff));
  }

  // Second benchmark end to end against the Riccati reference.
  {
    const auto sol2 = esorl::example2_analytic();
    const double werr =
        trE.stats.diverged
            ? std::numeric_limits<double>::infinity()
            : esorl::weight_error(trE.stats.final_theta_c, sol2).first;
    report(11, "three-state benchmark learns the Riccati weights end to end",
           !trE.stats.diverged && trE.stats.final_x_norm <= 0.1 && werr <= 0.25,
           fmt("|x(T)| %.3g (tol 0.1), weight error %.3g (tol 0.25)",
               trE.stats.final_x_norm, werr));
  }

  std::sort(g_results.begin(), g_results.end(),
            [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  int failures = 0;
  for (const auto& c : g_results) {
    if (!c.pass) ++failures;
    std::printf("[%s] %2d  %s\n           %s\n", c.pass ? "PASS" : "FAIL", c.id,
                c.label.c_str(), c.detail.c_str());
  }
  std::printf("\n%zu checks, %d failed\n", g_results.size(), failures);
  return failures == 0 ? 0 : 1;
}
