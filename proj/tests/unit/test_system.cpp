#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "nsr/rng.hpp"
#include "nsr/system.hpp"

using namespace nsr;

TEST_SUITE("system") {

TEST_CASE("vehicle3d step from the origin") {
  const SystemDef s = builtin_system("vehicle3d");
  const Vec x = s.step(Vec{0, 0, 0}, Vec{0.5});
  CHECK(x[0] == 0.0);
  CHECK(x[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(x[2] == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("pendulum equilibrium is fixed under zero input") {
  const SystemDef s = builtin_system("pendulum");
  const Vec x = s.step(Vec{0, 0}, Vec{0});
  CHECK(x == Vec{0, 0});
}

TEST_CASE("double pendulum outputs the first link") {
  const SystemDef s = builtin_system("double_pendulum");
  CHECK(s.output(Vec{0.3, -0.1, 0.2, 0.0}) == Vec{0.3, -0.1});
}

TEST_CASE("vehicle constants") {
  for (const char* name : {"vehicle3d", "vehicle5d"}) {
    const SystemDef s = builtin_system(name);
    CHECK(s.tau == 0.1);
    CHECK(s.lipschitz.x == 1.1);
    CHECK(s.lipschitz.u == 0.1);
    CHECK(s.lipschitz.h == 1.0);
  }
  const SystemDef src = builtin_system("vehicle3d");
  CHECK(src.state_set.lb == Vec{-2, 0, -1});
  CHECK(src.state_set.ub == Vec{3, 8, 1});
  CHECK(src.initial_set.lb == Vec{-2, 0, -1});
  CHECK(src.initial_set.ub == Vec{-1, 2, 1});
  CHECK(src.input_set.lb == Vec{-0.5});
  CHECK(src.input_set.ub == Vec{0.5});
  const SystemDef tgt = builtin_system("vehicle5d");
  CHECK(tgt.state_set.lb == Vec{-2, 0, -1, -1, -1});
  CHECK(tgt.state_set.ub == Vec{3, 8, 1, 1, 1});
  CHECK(tgt.input_set.lb == Vec{-1, -1});
  CHECK(tgt.input_set.ub == Vec{1, 1});
  CHECK(tgt.n == 5);
  CHECK(tgt.m == 2);
  CHECK(tgt.l == 2);
}

TEST_CASE("pendulum constants") {
  const SystemDef src = builtin_system("pendulum");
  CHECK(src.tau == 0.01);
  CHECK(src.params.at("g") == 9.8);
  CHECK(src.params.at("gain") == 9.1);
  CHECK(src.lipschitz.x == 1.098);
  CHECK(src.lipschitz.u == 0.091);
  CHECK(src.lipschitz.h == 1.0);
  CHECK(src.state_set.lb == Vec{-0.5, -0.5});
  CHECK(src.input_set.ub == Vec{1});
  const SystemDef tgt = builtin_system("double_pendulum");
  CHECK(tgt.tau == 0.01);
  CHECK(tgt.params.at("gain1") == 30.0);
  CHECK(tgt.params.at("gain2") == 39.0);
  CHECK(tgt.lipschitz.x == 1.098);
  CHECK(tgt.lipschitz.u == 0.39);
  CHECK(tgt.lipschitz.h == 1.0);
  CHECK(tgt.state_set.lb == Vec(4, -0.5));
  CHECK(tgt.input_set.lb == Vec{-1, -1});
}

TEST_CASE("unknown system names list the valid ones") {
  try {
    builtin_system("unicycle");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unicycle") != std::string::npos);
    for (const auto& n : builtin_system_names()) CHECK(msg.find(n) != std::string::npos);
  }
}

TEST_CASE("builtin systems validate, are deterministic and stay finite on their boxes") {
  Rng rng(11);
  for (const auto& name : builtin_system_names()) {
    const SystemDef s = builtin_system(name);
    CHECK_NOTHROW(s.validate());
    for (int i = 0; i < 2000; ++i) {
      Vec x(s.n), u(s.m);
      for (std::size_t d = 0; d < s.n; ++d) x[d] = rng.uniform(s.state_set.lb[d], s.state_set.ub[d]);
      for (std::size_t d = 0; d < s.m; ++d) u[d] = rng.uniform(s.input_set.lb[d], s.input_set.ub[d]);
      const Vec a = s.step(x, u), b = s.step(x, u);
      CHECK(a == b);
      for (double v : a) REQUIRE(std::isfinite(v));
    }
  }
}

TEST_CASE("step rejects wrong dimensions") {
  const SystemDef s = builtin_system("pendulum");
  CHECK_THROWS_AS(s.step(Vec{0, 0, 0}, Vec{0}), Error);
  CHECK_THROWS_AS(s.step(Vec{0, 0}, Vec{0, 1}), Error);
}

TEST_CASE("controllers") {
  const SystemDef pend = builtin_system("pendulum");
  const SystemDef car = builtin_system("vehicle3d");

  SUBCASE("zero") {
    const ControllerDef c = builtin_controller("zero", car);
    CHECK(c(Vec{1, 2, 0.3}, 7) == Vec{0});
  }
  SUBCASE("pendulum stabilizer vanishes at the equilibrium and saturates") {
    const ControllerDef c = builtin_controller("pendulum_stabilizer", pend);
    CHECK(c(Vec{0, 0}, 0) == Vec{0});
    CHECK(c(Vec{0.1, 0.0}, 0)[0] == doctest::Approx(-0.2));
    CHECK(c(Vec{5.0, 5.0}, 0) == Vec{-1});
  }
  SUBCASE("vehicle waypoint stays inside the input box") {
    const ControllerDef c = builtin_controller("vehicle_waypoint", car);
    for (double h : {-1.0, 0.0, 1.0}) {
      const double u = c(Vec{-1.5, 1.0, h}, 0)[0];
      CHECK(u >= -0.5);
      CHECK(u <= 0.5);
    }
  }
  SUBCASE("random is seeded and time-varying") {
    const ControllerDef a = builtin_controller("random(7)", pend);
    const ControllerDef b = builtin_controller("random(7)", pend);
    const ControllerDef c = builtin_controller("random(8)", pend);
    bool varies = false;
    for (std::uint64_t t = 0; t < 50; ++t) {
      const Vec ua = a(Vec{0, 0}, t);
      CHECK(ua == b(Vec{0, 0}, t));
      CHECK(pend.input_set.contains(ua));
      varies |= ua != c(Vec{0, 0}, t);
    }
    CHECK(varies);
  }
  SUBCASE("unknown controller") {
    CHECK_THROWS_AS(builtin_controller("lqr", pend), Error);
  }
}

TEST_CASE("sampled Lipschitz check") {
  SUBCASE("identity output meets its constant with equality") {
    const SystemDef s = test::line_system(0.5, 0.1, -1, 1);
    const auto r = sample_lipschitz_check(s, 1000, 3);
    CHECK(r.max_ratio_h == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.violations() == 0);
  }
  SUBCASE("vehicle3d declared constants hold") {
    const auto r = sample_lipschitz_check(builtin_system("vehicle3d"), 10000, 5);
    CHECK(r.pairs == 10000);
    CHECK(r.violations() == 0);
    CHECK(r.max_ratio_f <= 1.0);
  }
  SUBCASE("a zero state constant is caught") {
    SystemDef s = builtin_system("vehicle3d");
    s.lipschitz.x = 0.0;
    const auto r = sample_lipschitz_check(s, 10000, 5);
    CHECK(r.violations_f > 0);
  }
  SUBCASE("deterministic for a fixed seed") {
    const SystemDef s = builtin_system("pendulum");
    const auto a = sample_lipschitz_check(s, 500, 9), b = sample_lipschitz_check(s, 500, 9);
    CHECK(a.max_ratio_f == b.max_ratio_f);
    CHECK(a.max_ratio_h == b.max_ratio_h);
  }
}

TEST_CASE("system_from_dynamics applies parameters") {
  const SystemDef s = system_from_dynamics("scalar_linear", {{"a", 2.0}, {"b", 3.0}});
  CHECK(s.step(Vec{1.0}, Vec{1.0}) == Vec{5.0});
  CHECK(s.lipschitz.x == 2.0);
  CHECK(s.lipschitz.u == 3.0);
  CHECK_THROWS_AS(system_from_dynamics("nope"), Error);
}

TEST_CASE("describe prints the constants") {
  const std::string d = describe(builtin_system("pendulum"));
  CHECK(d.find("L_x = 1.098") != std::string::npos);
  CHECK(d.find("tau = 0.01") != std::string::npos);
}

}  // TEST_SUITE
