#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>

#include "esorl/config.hpp"

using esorl::Vec;

namespace {

const char* kMinimalEx2 = R"({
  "system": "example2",
  "observer": {"L": [4, 6, 4, 1], "M": [2, 2, 6, 4]},
  "learner": {
    "basis": "quad3",
    "grid": {"a": 2, "box": [[-1, 1], [-1, 1], [-5, 5]]},
    "theta_v0": [1, 1, 1, 1, 1, 1],
    "theta_c0": [1, 1, 1, 1, 1, 1],
    "Gamma0_diag": [100, 100, 100, 100, 100, 100]
  },
  "sim": {"h": 0.001, "T": 1.0, "x0": [0.5, 0.5, 4.0]}
})";

std::string with_random_weights(unsigned seed) {
  return std::string(R"({
  "system": "example2",
  "seed": )") +
         std::to_string(seed) + R"(,
  "observer": {"L": [4, 6, 4, 1], "M": [2, 2, 6, 4]},
  "learner": {
    "basis": "quad3",
    "grid": {"a": 2, "box": [[-1, 1], [-1, 1], [-5, 5]]},
    "theta_v0": {"random": [0, 2]},
    "theta_c0": {"random": [0, 2]},
    "Gamma0_diag": [100, 100, 100, 100, 100, 100]
  },
  "sim": {"h": 0.001, "T": 1.0, "x0": [0.5, 0.5, 4.0]}
})";
}

}  // namespace

TEST_CASE("every bundled configuration resolves") {
  const auto& bundled = esorl::bundled_config_text();
  CHECK(bundled.size() == 7);
  CHECK(bundled.count("example1_known_basis") == 1);
  CHECK(bundled.count("example1_unknown_basis") == 1);
  CHECK(bundled.count("example1_grid_2") == 1);
  CHECK(bundled.count("example1_grid_3") == 1);
  CHECK(bundled.count("example1_grid_5") == 1);
  CHECK(bundled.count("example1_grid_9") == 1);
  CHECK(bundled.count("example2") == 1);
  for (const auto& [name, text] : bundled) {
    INFO(name);
    CHECK_NOTHROW(esorl::resolve_config(text));
  }
  CHECK_THROWS_AS(esorl::load_config_text("no_such_config"),
                  std::invalid_argument);
}

TEST_CASE("the stock first-benchmark configuration carries its settings") {
  const auto run = esorl::resolve_config(
      esorl::load_config_text("example1_known_basis"));
  CHECK(run.system_name == "example1");
  CHECK(run.seed == 0);
  CHECK(run.observer.L == (Vec(3) << 3.0, 3.0, 1.0).finished());
  CHECK(run.observer.epsilon == 0.02);
  CHECK(run.observer.M == (Vec(3) << 2.0, 2.0, 2.0).finished());
  CHECK(run.observer.initial == Vec::Zero(3));
  CHECK(run.learner.basis.name == "quad2");
  CHECK(run.learner.grid.N() == 25);
  CHECK(run.learner.gains.lambda_v1 == 1.0);
  CHECK(run.learner.gains.lambda_v2 == 5.0);
  CHECK(run.learner.gains.lambda_c1 == 100.0);
  CHECK(run.learner.gains.lambda_c2 == 0.1);
  CHECK(run.learner.gains.beta == 100.0);
  CHECK(run.learner.gains.gamma == 0.5);
  CHECK(run.learner.gains.sigma1 == 2000.0);
  CHECK(run.sim.theta_v0 == Vec::Constant(3, 0.5));
  CHECK(run.sim.theta_c0 == Vec::Constant(3, 0.5));
  CHECK(run.sim.Gamma0 == esorl::Mat::Identity(3, 3) * 100.0);
  CHECK(run.sim.h == 1e-3);
  CHECK(run.sim.T == 100.0);
  CHECK(run.sim.record_stride == 100);
  CHECK(run.sim.x0 == (Vec(2) << 1.5, 1.5).finished());
  CHECK(run.sim.z0 == Vec::Ones(1));
  CHECK(run.warnings.empty());
}

TEST_CASE("the second-benchmark configuration uses the faster critic sweep") {
  const auto run = esorl::resolve_config(esorl::load_config_text("example2"));
  CHECK(run.system_name == "example2");
  CHECK(run.observer.L == (Vec(4) << 4.0, 6.0, 4.0, 1.0).finished());
  CHECK(run.observer.epsilon == 0.01);
  CHECK(run.learner.basis.name == "quad3");
  CHECK(run.learner.gains.lambda_v2 == 500.0);
  CHECK(run.sim.h == 5e-4);
  CHECK(run.sim.z0.size() == 0);
}

TEST_CASE("omitted fields take documented defaults") {
  const auto run = esorl::resolve_config(kMinimalEx2);
  CHECK(run.seed == 0);
  CHECK(run.observer.epsilon == 0.02);
  CHECK(run.observer.initial == Vec::Zero(4));
  CHECK(run.learner.grid_stride == 1);
  CHECK(run.learner.gains.lambda_v1 == 1.0);
  CHECK(run.learner.gains.sigma1 == 2000.0);
  CHECK(run.sim.record_stride == 1);
  CHECK(run.sim.z0.size() == 0);
  CHECK(run.warnings.empty());
  CHECK(run.echo["observer"]["epsilon"].get<double>() == 0.02);
  CHECK(run.echo["learner"]["gains"]["beta"].get<double>() == 100.0);
}

TEST_CASE("the echoed document is a fixed point of resolution") {
  for (const auto& name :
       {"example1_known_basis", "example1_unknown_basis", "example2"}) {
    const auto run1 = esorl::resolve_config(esorl::load_config_text(name));
    const auto run2 = esorl::resolve_config(run1.echo.dump());
    INFO(name);
    CHECK(run1.echo == run2.echo);
    CHECK(run2.sim.theta_v0 == run1.sim.theta_v0);
    CHECK(run2.sim.theta_c0 == run1.sim.theta_c0);
  }
}

TEST_CASE("random weight draws are seeded, ordered, and overridable") {
  const auto a = esorl::resolve_config(with_random_weights(7));
  const auto b = esorl::resolve_config(with_random_weights(7));
  CHECK(a.sim.theta_v0 == b.sim.theta_v0);
  CHECK(a.sim.theta_c0 == b.sim.theta_c0);
  const auto c = esorl::resolve_config(with_random_weights(8));
  CHECK(a.sim.theta_v0 != c.sim.theta_v0);

  // The value stream is the standard 64-bit twister mapped to [lo, hi),
  // with the six value weights drawn before the six policy weights.
  std::mt19937_64 rng(7);
  for (int i = 0; i < 6; ++i) {
    const double u = (rng() >> 11) * 0x1.0p-53;
    CHECK(a.sim.theta_v0[i] == 2.0 * u);
  }
  for (int i = 0; i < 6; ++i) {
    const double u = (rng() >> 11) * 0x1.0p-53;
    CHECK(a.sim.theta_c0[i] == 2.0 * u);
  }

  const auto d = esorl::resolve_config(with_random_weights(7), 8);
  CHECK(d.seed == 8);
  CHECK(d.sim.theta_v0 == c.sim.theta_v0);
  CHECK(d.echo["seed"].get<std::uint64_t>() == 8);
}

TEST_CASE("malformed documents are rejected with specific messages") {
  auto reject = [](const std::string& text) {
    CHECK_THROWS_AS(esorl::resolve_config(text), std::invalid_argument);
  };
  reject("not json at all");

  std::string t = kMinimalEx2;
  auto swap = [&](const std::string& from, const std::string& to) {
    std::string s = t;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  reject(swap("[4, 6, 4, 1]", "[4, 6, 4]"));            // short gain vector
  reject(swap("[4, 6, 4, 1]", "[-4, 6, 4, 1]"));        // not Hurwitz
  reject(swap("\"h\": 0.001", "\"h\": 0.011"));         // stiff step
  reject(swap("\"h\": 0.001", "\"h\": -0.001"));        // negative step
  reject(swap("\"quad3\"", "\"quad2\""));               // basis dimension clash
  reject(swap("\"a\": 2", "\"a\": 1"));                 // degenerate grid
  reject(swap("[[-1, 1], [-1, 1], [-5, 5]]",
              "[[-1, 1], [-1, 1]]"));                   // missing box entry
  reject(swap("[[-1, 1], [-1, 1], [-5, 5]]",
              "[[-1, 1], [-1, 1], [5, -5]]"));          // inverted interval
  reject(swap("\"Gamma0_diag\": [100, 100, 100, 100, 100, 100]",
              "\"Gamma0_diag\": [100, 100, 100]"));     // wrong weight count
  reject(swap("\"Gamma0_diag\": [100, 100, 100, 100, 100, 100]",
              "\"Gamma0_diag\": [100, 0, 100, 100, 100, 100]"));  // flat direction
  reject(swap("\"x0\": [0.5, 0.5, 4.0]", "\"x0\": [0.5, 0.5]"));
  reject(swap("\"theta_v0\": [1, 1, 1, 1, 1, 1]", "\"theta_v0\": [1, 1]"));
  reject(swap("\"system\": \"example2\"", "\"system\": \"example9\""));
  CHECK_THROWS(esorl::resolve_config("{\"system\": \"example2\"}"));
}

TEST_CASE("weak actor forgetting relative to tracking draws a warning") {
  std::string t = kMinimalEx2;
  const std::string gains =
      "\"gains\": {\"lambda_c1\": 1.0, \"lambda_c2\": 0.5},\n    \"basis\"";
  t.replace(t.find("\"basis\""), 7, gains);
  const auto run = esorl::resolve_config(t);
  REQUIRE_FALSE(run.warnings.empty());
  CHECK(run.warnings[0].find("lambda_c2") != std::string::npos);
}

TEST_CASE("a marginal step size passes with a warning") {
  std::string t = kMinimalEx2;
  t.replace(t.find("\"h\": 0.001"), 10, "\"h\": 0.009");
  const auto run = esorl::resolve_config(t);
  REQUIRE_FALSE(run.warnings.empty());
  CHECK(run.warnings[0].find("epsilon") != std::string::npos);
}
