#ifndef ESORL_CONFIG_HPP_
#define ESORL_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "esorl/basis.hpp"
#include "esorl/dynamics.hpp"
#include "esorl/observer.hpp"
#include "esorl/sim.hpp"

namespace esorl {

using Json = nlohmann::json;

/**
 * Everything a run needs, resolved from a config document: system, observer,
 * learner, integrator settings, and the echo document whose values are all
 * concrete (random draws replaced by the drawn numbers).
 */
struct ResolvedRun {
  std::string system_name;
  std::uint64_t seed = 0;
  ExampleSystem system;
  EsoConfig observer;
  LearnerConfig learner;
  SimConfig sim;
  Json echo;
  std::vector<std::string> warnings;
};

namespace detail {

inline Vec json_vec(const Json& j, const std::string& key) {
  if (!j.is_array()) throw std::invalid_argument("config: " + key + " must be an array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

inline Json vec_json(const Vec& v) {
  Json j = Json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

// Weight entries are either an explicit array or {"random": [lo, hi]}.
inline Vec resolve_weights(const Json& j, const std::string& key, int l,
                           std::mt19937_64& rng) {
  if (j.is_array()) {
    const Vec v = json_vec(j, key);
    if (v.size() != l) {
      throw std::invalid_argument("config: " + key + " must have " +
                                  std::to_string(l) + " entries");
    }
    return v;
  }
  if (j.is_object() && j.contains("random")) {
    const auto r = j.at("random");
    if (!r.is_array() || r.size() != 2) {
      throw std::invalid_argument("config: " + key + ".random must be [lo, hi]");
    }
    const double lo = r[0].get<double>(), hi = r[1].get<double>();
    Vec v(l);
    for (int i = 0; i < l; ++i) {
      const double u01 = (rng() >> 11) * 0x1.0p-53;
      v[i] = lo + (hi - lo) * u01;
    }
    return v;
  }
  throw std::invalid_argument("config: " + key +
                              " must be an array or {\"random\": [lo, hi]}");
}

}  // namespace detail

// Bundled config registry is provided by the build (embedded from configs/).
const std::map<std::string, std::string>& bundled_config_text();

inline std::string load_config_text(const std::string& name_or_path) {
  {
    std::ifstream in(name_or_path);
    if (in) {
      return std::string(std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>());
    }
  }
  const auto& bundled = bundled_config_text();
  const auto it = bundled.find(name_or_path);
  if (it != bundled.end()) return it->second;
  throw std::invalid_argument("config '" + name_or_path +
                              "' is neither a readable file nor a bundled name");
}

namespace detail {

inline ResolvedRun resolve_fields(const Json& j,
                                  std::optional<std::uint64_t> seed_override) {
  ResolvedRun run;
  run.system_name = j.value("system", std::string("example1"));
  run.system = lookup_system(run.system_name);
  const int n = run.system.plant.n;
  const int p = run.system.plant.p;

  run.seed = seed_override.value_or(j.value("seed", std::uint64_t{0}));
  std::mt19937_64 rng(run.seed);

  const Json& obs = j.at("observer");
  run.observer.L = detail::json_vec(obs.at("L"), "observer.L");
  run.observer.epsilon = obs.value("epsilon", 0.02);
  run.observer.M = detail::json_vec(obs.at("M"), "observer.M");
  run.observer.initial = obs.contains("initial")
                             ? detail::json_vec(obs.at("initial"), "observer.initial")
                             : Vec::Zero(n + 1);
  if (run.observer.L.size() != n + 1 || run.observer.M.size() != n + 1 ||
      run.observer.initial.size() != n + 1) {
    throw std::invalid_argument("config: observer vectors must have n+1 entries");
  }
  if (run.observer.epsilon <= 0.0) {
    throw std::invalid_argument("config: observer.epsilon must be positive");
  }
  if ((run.observer.M.array() <= 0.0).any()) {
    throw std::invalid_argument("config: observer.M entries must be positive");
  }
  if (!hurwitz_check(run.observer.L).ok) {
    throw std::invalid_argument("config: observer.L is not Hurwitz");
  }

  const Json& lrn = j.at("learner");
  run.learner.basis = make_basis(lrn.value("basis", std::string("quad2")));
  if (run.learner.basis.n != n) {
    throw std::invalid_argument("config: basis state dimension does not match system");
  }
  const int l = run.learner.basis.l;

  const Json& grid = lrn.at("grid");
  const int a = grid.at("a").get<int>();
  const Json& boxj = grid.at("box");
  if (!boxj.is_array() || static_cast<int>(boxj.size()) != n) {
    throw std::invalid_argument("config: learner.grid.box needs one [lo,hi] per state");
  }
  std::vector<std::array<double, 2>> box;
  for (const auto& e : boxj) {
    if (!e.is_array() || e.size() != 2 || !(e[0].get<double>() < e[1].get<double>())) {
      throw std::invalid_argument("config: grid.box entries must be [lo, hi] with lo < hi");
    }
    box.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  run.learner.grid = make_grid(box, a);
  run.learner.grid_stride = lrn.value("grid_stride", 1);
  if (run.learner.grid_stride < 1) {
    throw std::invalid_argument("config: learner.grid_stride must be >= 1");
  }

  const Json gains = lrn.value("gains", Json::object());
  LearnerGains& g = run.learner.gains;
  g.lambda_v1 = gains.value("lambda_v1", 1.0);
  g.lambda_v2 = gains.value("lambda_v2", 5.0);
  g.lambda_c1 = gains.value("lambda_c1", 100.0);
  g.lambda_c2 = gains.value("lambda_c2", 0.1);
  g.beta = gains.value("beta", 100.0);
  g.gamma = gains.value("gamma", 0.5);
  g.sigma1 = gains.value("sigma1", 2000.0);
  if (g.gamma <= 0.0 || g.sigma1 <= 0.0) {
    throw std::invalid_argument("config: gamma and sigma1 must be positive");
  }
  if (g.lambda_c1 > 0.0 && g.lambda_c2 / g.lambda_c1 > 0.1) {
    run.warnings.push_back("lambda_c2/lambda_c1 not small; forgetting may bias weights");
  }

  // theta_v0 is drawn before theta_c0; document order is fixed, not map order.
  run.sim.theta_v0 = detail::resolve_weights(lrn.at("theta_v0"), "learner.theta_v0", l, rng);
  run.sim.theta_c0 = detail::resolve_weights(lrn.at("theta_c0"), "learner.theta_c0", l, rng);
  const Vec gdiag = detail::json_vec(lrn.at("Gamma0_diag"), "learner.Gamma0_diag");
  if (gdiag.size() != l) {
    throw std::invalid_argument("config: Gamma0_diag must have l entries");
  }
  if ((gdiag.array() <= 0.0).any()) {
    throw std::invalid_argument("config: Gamma0_diag entries must be positive");
  }
  run.sim.Gamma0 = gdiag.asDiagonal();

  const Json& sim = j.at("sim");
  run.sim.h = sim.at("h").get<double>();
  run.sim.T = sim.at("T").get<double>();
  run.sim.record_stride = sim.value("record_stride", 1);
  run.sim.x0 = detail::json_vec(sim.at("x0"), "sim.x0");
  run.sim.z0 = sim.contains("z0") ? detail::json_vec(sim.at("z0"), "sim.z0") : Vec(0);
  if (run.sim.x0.size() != n || run.sim.z0.size() != p) {
    throw std::invalid_argument("config: x0/z0 dimensions do not match system");
  }
  if (run.sim.h <= 0.0 || run.sim.T <= 0.0 || run.sim.record_stride < 1) {
    throw std::invalid_argument("config: sim.h, sim.T, sim.record_stride must be positive");
  }
  if (run.sim.h > run.observer.epsilon / 2.0) {
    throw std::invalid_argument(
        "config: sim.h exceeds epsilon/2 stiffness guard for the observer");
  }
  if (run.sim.h > run.observer.epsilon / 10.0) {
    run.warnings.push_back("sim.h above epsilon/10; observer dynamics marginally resolved");
  }

  // Echo with every default filled and every random draw made concrete.
  Json echo;
  echo["system"] = run.system_name;
  echo["seed"] = run.seed;
  echo["observer"]["L"] = detail::vec_json(run.observer.L);
  echo["observer"]["epsilon"] = run.observer.epsilon;
  echo["observer"]["M"] = detail::vec_json(run.observer.M);
  echo["observer"]["initial"] = detail::vec_json(run.observer.initial);
  echo["learner"]["basis"] = run.learner.basis.name;
  echo["learner"]["grid"]["a"] = a;
  echo["learner"]["grid"]["box"] = boxj;
  echo["learner"]["grid_stride"] = run.learner.grid_stride;
  echo["learner"]["gains"] = {
      {"lambda_v1", g.lambda_v1}, {"lambda_v2", g.lambda_v2},
      {"lambda_c1", g.lambda_c1}, {"lambda_c2", g.lambda_c2},
      {"beta", g.beta},           {"gamma", g.gamma},
      {"sigma1", g.sigma1}};
  echo["learner"]["theta_v0"] = detail::vec_json(run.sim.theta_v0);
  echo["learner"]["theta_c0"] = detail::vec_json(run.sim.theta_c0);
  echo["learner"]["Gamma0_diag"] = detail::vec_json(gdiag);
  echo["sim"] = {{"h", run.sim.h},
                 {"T", run.sim.T},
                 {"record_stride", run.sim.record_stride},
                 {"x0", detail::vec_json(run.sim.x0)},
                 {"z0", detail::vec_json(run.sim.z0)}};
  run.echo = echo;
  return run;
}

}  // namespace detail

// Parses, validates, fills defaults, and resolves random weights with the
// given seed (CLI --seed overrides the document's seed).
inline ResolvedRun resolve_config(const std::string& text,
                                  std::optional<std::uint64_t> seed_override = {}) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  try {
    return detail::resolve_fields(j, seed_override);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

}  // namespace esorl

#endif  // ESORL_CONFIG_HPP_
