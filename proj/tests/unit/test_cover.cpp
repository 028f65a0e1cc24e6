#include <cmath>
#include <set>

#include <doctest.h>

#include "helpers.hpp"
#include "nsr/cover.hpp"
#include "nsr/rng.hpp"

using namespace nsr;

namespace {

// Brute-force T_d size over the materialized product grid.
std::uint64_t brute_count(const SystemDef& t, const SystemDef& s, const JointParams& p) {
  const GridCover gt = cover(t.state_set, p.e_state), gs = cover(s.state_set, p.e_state);
  std::uint64_t n = 0;
  for (std::uint64_t i = 0; i < gt.size; ++i) {
    const Vec y = t.output(gt.center(i));
    for (std::uint64_t j = 0; j < gs.size; ++j) {
      if (inf_dist(y, s.output(gs.center(j))) <= p.eps) ++n;
    }
  }
  return n;
}

SystemDef shrunk(const std::string& name, double half) {
  SystemDef s = builtin_system(name);
  s.state_set = Box::uniform(s.n, -half, half);
  s.initial_set = s.state_set;
  return s;
}

}  // namespace

TEST_SUITE("cover") {

TEST_CASE("unit interval, two cubes") {
  const GridCover g = cover(Box({0.0}, {1.0}), 0.5);
  CHECK(g.size == 2);
  CHECK(g.center(0) == Vec{0.25});
  CHECK(g.center(1) == Vec{0.75});
}

TEST_CASE("unit square") {
  const GridCover g = cover(Box::uniform(2, 0.0, 1.0), 0.5);
  CHECK(g.size == 4);
  CHECK(g.center(0) == Vec{0.25, 0.25});
  CHECK(g.center(1) == Vec{0.25, 0.75});  // last dimension fastest
}

TEST_CASE("vehicle axis count") {
  CHECK(cover(Box({-2.0}, {3.0}), 0.002).size == 2500);
  CHECK(cover(Box({0.0}, {8.0}), 0.002).size == 4000);
}

TEST_CASE("clipped edge cubes keep the half-width bound") {
  const GridCover g = cover(Box({0.0}, {1.0}), 0.4);
  REQUIRE(g.size == 3);
  CHECK(g.center(2)[0] == doctest::Approx(0.9));
  CHECK(g.center(2)[0] + 0.2 >= 1.0);
}

TEST_CASE("zero-width dimension gets one cube at its bound") {
  const GridCover g = cover(Box({0.3, 0.0}, {0.3, 1.0}), 0.5);
  CHECK(g.counts == std::vector<std::uint64_t>{1, 2});
  CHECK(g.center(0)[0] == 0.3);
}

TEST_CASE("rejected discretizations") {
  CHECK_THROWS_AS(cover(Box({0.0}, {1.0}), 0.0), Error);
  CHECK_THROWS_AS(cover(Box({0.0}, {1.0}), -0.1), Error);
  try {
    cover(Box::uniform(8, 0.0, 1.0), 1e-4);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("1e+32") != std::string::npos);
  }
}

TEST_CASE("nearest center") {
  const GridCover g = cover(Box({0.0}, {1.0}), 0.5);
  CHECK(nearest_center(g, Vec{0.4}).second == Vec{0.25});
  CHECK(nearest_center(g, Vec{1.0}).second == Vec{0.75});
  CHECK(nearest_center(g, Vec{1.0}).first == 1);
  const GridCover g2 = cover(Box::uniform(2, 0.0, 1.0), 0.5);
  CHECK(nearest_center(g2, Vec{0.6, 0.1}).second == Vec{0.75, 0.25});
  try {
    nearest_center(g2, Vec{0.5, 1.5});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("dimension 1") != std::string::npos);
  }
}

TEST_CASE("cover property on random points") {
  Rng rng(21);
  for (double e : {0.3, 0.07, 0.013}) {
    const Box box({-2.0, 0.0, -1.0}, {3.0, 8.0, 1.0});
    const GridCover g = cover(box, e);
    for (int i = 0; i < 20000; ++i) {
      Vec t(3);
      for (std::size_t d = 0; d < 3; ++d) t[d] = rng.uniform(box.lb[d], box.ub[d]);
      const auto [idx, c] = nearest_center(g, t);
      REQUIRE(inf_dist(t, c) <= e / 2);
      REQUIRE(g.center(idx) == c);
    }
  }
}

TEST_CASE("identical 1-D systems at eps = 0 pair only equal centers") {
  const SystemDef s = test::line_system(0.5, 0.1, 0.0, 1.0);
  const JointDataset ds = build_joint_dataset(s, s, {0.0, 0.5, 0.5});
  REQUIRE(ds.size() == 2);
  CHECK(ds.target_state(0) == Vec{0.25});
  CHECK(ds.source_state(0) == Vec{0.25});
  CHECK(ds.target_state(1) == Vec{0.75});
  CHECK(ds.source_state(1) == Vec{0.75});
}

TEST_CASE("an inactive filter keeps the whole product") {
  const SystemDef s = test::line_system(0.5, 0.1, 0.0, 1.0);
  const JointDataset ds = build_joint_dataset(s, s, {1.0, 0.5, 0.5});
  CHECK(ds.size() == 4);
  CHECK(ds.product_size == 4);
}

TEST_CASE("no pair passes the filter") {
  const SystemDef a = test::line_system(0.5, 0.1, 0.0, 1.0);
  const SystemDef b = test::line_system(0.5, 0.1, 5.0, 6.0);
  try {
    build_joint_dataset(a, b, {0.1, 0.5, 0.5});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("eps too small") != std::string::npos);
  }
}

TEST_CASE("dataset invariants") {
  const SystemDef t = builtin_system("pendulum"), s = builtin_system("pendulum");
  const JointParams p{0.05, 0.05, 0.25};
  const JointDataset ds = build_joint_dataset(t, s, p);

  SUBCASE("every pair passes the output filter") {
    for (std::size_t k = 0; k < ds.size(); ++k) {
      REQUIRE(inf_dist(t.output(ds.target_state(k)), s.output(ds.source_state(k))) <= p.eps);
    }
  }
  SUBCASE("streaming matches the materialized sequence") {
    std::vector<PairIndex> streamed;
    stream_joint_pairs(t, s, p, [&](const PairIndex& q) { streamed.push_back(q); });
    CHECK(streamed == ds.pairs);
  }
  SUBCASE("input grid covers U_hat") {
    CHECK(ds.inputs.size() == 8);
    for (const auto& u : ds.inputs) CHECK(s.input_set.contains(u));
  }
  SUBCASE("initial grids") {
    for (std::uint64_t i = 0; i < ds.init_grid.size; ++i) {
      REQUIRE(t.initial_set.contains(ds.init_grid.center(i)));
    }
    Rng rng(4);
    for (int i = 0; i < 5000; ++i) {
      const Vec x{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
      REQUIRE(inf_dist(x, nearest_center(ds.source_init_grid, x).second) <= p.e_state / 2);
    }
  }
  SUBCASE("init candidates are output-close by the margin") {
    CHECK(ds.init_output_margin == doctest::Approx(0.05 - 0.025));
    for (std::uint64_t j = 0; j < ds.source_init_grid.size; ++j) {
      const Vec yh = s.output(ds.source_init_grid.center(j));
      for (auto i : ds.candidates_for(j)) {
        REQUIRE(inf_dist(t.output(ds.init_grid.center(i)), yh) <= ds.init_output_margin);
      }
    }
  }
}

TEST_CASE("analytic count matches brute force") {
  struct Case {
    SystemDef t, s;
    JointParams p;
  };
  const std::vector<Case> cases = {
      {builtin_system("pendulum"), builtin_system("pendulum"), {0.05, 0.05, 0.25}},
      {builtin_system("pendulum"), builtin_system("pendulum"), {0.13, 0.07, 0.25}},
      {shrunk("vehicle5d", 0.5), shrunk("vehicle3d", 0.5), {0.2, 0.25, 0.25}},
      {shrunk("double_pendulum", 0.5), builtin_system("pendulum"), {0.1, 0.2, 0.5}},
  };
  for (const auto& c : cases) {
    const JointCount a = analytic_joint_count(c.t, c.s, c.p);
    const std::uint64_t b = brute_count(c.t, c.s, c.p);
    CHECK(static_cast<double>(a.filtered) == static_cast<double>(b));
    CHECK(static_cast<double>(a.filtered) ==
          static_cast<double>(build_joint_dataset(c.t, c.s, c.p).size()));
    CHECK(static_cast<double>(a.unfiltered) ==
          static_cast<double>(cover(c.t.state_set, c.p.e_state).size *
                              cover(c.s.state_set, c.p.e_state).size));
  }
}

TEST_CASE("dataset construction is independent of the worker count") {
  const SystemDef t = builtin_system("pendulum");
  const JointParams p{0.05, 0.03, 0.25};
  const JointDataset a = build_joint_dataset(t, t, p);
  CHECK(a.size() > 256);
  const JointDataset b = build_joint_dataset(t, t, p);
  CHECK(a.pairs == b.pairs);
  CHECK(a.init_candidates == b.init_candidates);
}

}  // TEST_SUITE
