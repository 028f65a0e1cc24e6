#include <cmath>
#include <cstdio>
#include <filesystem>

#include <doctest.h>

#include "helpers.hpp"
#include "nsr/mlp.hpp"
#include "nsr/rng.hpp"

using namespace nsr;

namespace {

Mlp single_layer(std::size_t in, std::size_t out, Vec W, Vec b, Head head = Head::relu,
                 Box clamp = {}) {
  Mlp net = make_mlp({in, out}, head, 0, head == Head::box_clamp ? "K" : "V", clamp);
  net.layers[0].W = std::move(W);
  net.layers[0].b = std::move(b);
  return net;
}

Vec random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Scalar loss sum_i c_i * out_i, so the upstream gradient is c.
double weighted(const Mlp& net, const Vec& x, const Vec& c) {
  const Vec y = forward(net, x);
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
  return s;
}

// Smallest |pre-activation| of any hidden ReLU unit; gradient checks skip
// inputs where a finite difference could straddle a kink.
double min_abs_preactivation(const Mlp& net, const Vec& x) {
  ForwardCache cache;
  forward(net, x, cache);
  double m = INFINITY;
  for (std::size_t j = 0; j < cache.pre.size(); ++j) {
    if (j + 1 == cache.pre.size() && net.head != Head::relu) break;
    for (double z : cache.pre[j]) m = std::min(m, std::abs(z));
  }
  return m;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("nsr_unit_" + name)).string();
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("forward examples") {
  const Mlp id = single_layer(2, 2, {1, 0, 0, 1}, {0, 0});
  CHECK(forward(id, Vec{3, -2}) == Vec{3, 0});

  Mlp zero_sig = make_relation_net(2, 1, {4, 4}, 3);
  zero_sig = zeros_like(zero_sig);
  CHECK(forward(zero_sig, Vec{0.3, -7, 2})[0] == 0.5);
  CHECK(forward(zero_sig, Vec{100, 100, 100})[0] == 0.5);

  const Mlp clamp = single_layer(1, 1, {1}, {0}, Head::box_clamp, Box({-1.0}, {1.0}));
  CHECK(forward(clamp, Vec{2.5})[0] == 1.0);
  CHECK(forward(clamp, Vec{-2.5})[0] == -1.0);
  CHECK(forward(clamp, Vec{0.25})[0] == 0.25);

  CHECK_THROWS_AS(forward(id, Vec{1, 2, 3}), Error);
}

TEST_CASE("backward examples") {
  const Mlp net = single_layer(1, 1, {2}, {0});
  ForwardCache cache;
  forward(net, Vec{3}, cache);
  Gradients g = backward(net, cache, Vec{1});
  CHECK(g.dW[0][0] == 3.0);
  CHECK(g.db[0][0] == 1.0);
  CHECK(g.d_input[0] == 2.0);

  forward(net, Vec{-3}, cache);
  g = backward(net, cache, Vec{1});
  CHECK(g.dW[0][0] == 0.0);
  CHECK(g.d_input[0] == 0.0);

  const Mlp clamp = single_layer(1, 1, {1}, {0}, Head::box_clamp, Box({-1.0}, {1.0}));
  forward(clamp, Vec{2.5}, cache);
  CHECK(backward(clamp, cache, Vec{1}).dW[0][0] == 0.0);
  forward(clamp, Vec{0.5}, cache);
  CHECK(backward(clamp, cache, Vec{1}).dW[0][0] == 0.5);
}

TEST_CASE("gradient check against central differences") {
  struct Case {
    Mlp net;
    std::size_t in;
  };
  const std::vector<Case> cases = {
      {make_mlp({3, 6, 2}, Head::relu, 1), 3},
      {make_relation_net(2, 2, {7, 5}, 2), 4},
      {make_interface_net(2, 1, 1, Box({-5.0}, {5.0}), {6, 6}, 3, false), 4},
  };
  Rng rng(99);
  const double delta = 1e-5;
  std::size_t checked = 0;
  for (const auto& c : cases) {
    Mlp net = c.net;
    for (auto& L : net.layers) {
      for (auto& b : L.b) b = rng.uniform(-0.3, 0.3);
    }
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = random_vec(rng, c.in);
      if (min_abs_preactivation(net, x) < 1e-3) continue;
      const Vec up = random_vec(rng, net.output_dim());
      ForwardCache cache;
      forward(net, x, cache);
      const Gradients g = backward(net, cache, up);
      for (std::size_t j = 0; j < net.layers.size(); ++j) {
        for (int which = 0; which < 2; ++which) {
          Vec& params = which == 0 ? net.layers[j].W : net.layers[j].b;
          const Vec& grad = which == 0 ? g.dW[j] : g.db[j];
          for (std::size_t k = 0; k < params.size(); ++k) {
            const double keep = params[k];
            params[k] = keep + delta;
            const double fp = weighted(net, x, up);
            params[k] = keep - delta;
            const double fm = weighted(net, x, up);
            params[k] = keep;
            const double fd = (fp - fm) / (2 * delta);
            const double rel = std::abs(grad[k] - fd) / (std::abs(grad[k]) + 1e-8);
            if (std::abs(grad[k]) < 1e-9 && std::abs(fd) < 1e-9) continue;
            INFO("layer ", j, " param ", k);
            REQUIRE(rel < 1e-4);
            ++checked;
          }
        }
      }
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("Lipschitz bound examples") {
  CHECK(lipschitz_upper_bound(single_layer(2, 1, {2, -1}, {0})) == 3.0);
  Mlp two = make_mlp({1, 2, 1}, Head::sigmoid, 0);
  two.layers[0].W = {2, -1};    // rows: |2|, |-1| -> 2
  two.layers[1].W = {1.5, -1.5};  // |1.5| + |-1.5| = 3
  CHECK(lipschitz_upper_bound(two) == 1.5);
  CHECK(spectral_lipschitz_bound(single_layer(2, 1, {3, 4}, {0})) == doctest::Approx(5.0));
}

TEST_CASE("Lipschitz bound is never exceeded on random pairs") {
  Rng rng(17);
  const std::vector<Mlp> nets = {
      make_relation_net(2, 2, {20, 20}, 5),
      make_interface_net(3, 2, 1, Box({-1.0}, {1.0}), {16, 16}, 6, true),
      make_mlp({3, 10, 10, 2}, Head::relu, 7),
  };
  for (const auto& net : nets) {
    const double L = lipschitz_upper_bound(net);
    for (int i = 0; i < 100000 / static_cast<int>(nets.size()); ++i) {
      const Vec a = random_vec(rng, net.input_dim(), -2, 2);
      Vec b = a;
      const double r = std::pow(10.0, rng.uniform(-4, 0));
      for (auto& v : b) v += rng.uniform(-r, r);
      const double lhs = inf_dist(forward(net, a), forward(net, b));
      REQUIRE(lhs <= L * inf_dist(a, b) * (1 + 1e-12) + 1e-15);
    }
  }
}

TEST_CASE("head ranges hold on random inputs") {
  Rng rng(23);
  const Box U({-0.5, 0.0}, {0.5, 2.0});
  const Mlp V = make_relation_net(3, 2, {20, 20}, 8);
  const Mlp K = make_interface_net(3, 2, 2, U, {20, 20}, 9, false);
  for (int i = 0; i < 5000; ++i) {
    const double v = forward(V, random_vec(rng, 5, -50, 50))[0];
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE(U.contains(forward(K, random_vec(rng, 7, -50, 50))));
  }
}

TEST_CASE("pass-through interface reproduces u_hat") {
  const Box U({-1.0}, {1.0});
  const Mlp K = make_interface_net(2, 2, 1, U, {16, 16, 16}, 4, true);
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    Vec in = random_vec(rng, 5, -0.5, 0.5);
    in[4] = rng.uniform(-1, 1);
    CHECK(forward(K, in)[0] == doctest::Approx(in[4]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(make_interface_net(2, 2, 2, Box({-1.0, -1.0}, {1.0, 1.0}), {3}, 0, true), Error);
}

TEST_CASE("optimizer") {
  Mlp net = make_mlp({3, 5, 1}, Head::sigmoid, 12);

  SUBCASE("zero gradient leaves parameters unchanged") {
    const Mlp before = net;
    TrainState s = TrainState::for_net(net, 0.1);
    optimizer_step(net, Gradients::zeros_like(net), s);
    for (std::size_t j = 0; j < net.layers.size(); ++j) {
      CHECK(net.layers[j].W == before.layers[j].W);
      CHECK(net.layers[j].b == before.layers[j].b);
    }
  }
  SUBCASE("step counter") {
    TrainState s = TrainState::for_net(net, 0.1);
    for (int i = 1; i <= 3; ++i) {
      optimizer_step(net, Gradients::zeros_like(net), s);
      CHECK(s.step == static_cast<std::uint64_t>(i));
    }
  }
  SUBCASE("replay is bit-identical") {
    auto run = [&]() {
      Mlp n = make_mlp({3, 5, 1}, Head::sigmoid, 12);
      TrainState s = TrainState::for_net(n, 0.01, 5);
      Rng rng(5);
      for (int i = 0; i < 100; ++i) {
        ForwardCache c;
        const Vec x = random_vec(rng, 3);
        const double y = forward(n, x, c)[0];
        optimizer_step(n, backward(n, c, Vec{y - 0.3}), s);
      }
      return to_text(n);
    };
    CHECK(run() == run());
  }
  SUBCASE("non-finite gradients are rejected") {
    TrainState s = TrainState::for_net(net, 0.1);
    Gradients g = Gradients::zeros_like(net);
    g.db[0][1] = NAN;
    const std::string before = to_text(net);
    CHECK_THROWS_AS(optimizer_step(net, g, s), NonFiniteGradient);
    CHECK(to_text(net) == before);
    CHECK(s.step == 0);
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Mlp V = make_relation_net(3, 2, {20, 20}, 41);
  V.config_hash = "0123456789abcdef";
  Rng rng(2);
  for (auto& L : V.layers) {
    for (auto& b : L.b) b = rng.uniform(-1e-3, 1e-3);
  }
  const std::string path = temp_path("v.ckpt");
  save(V, path);
  const Mlp W = load(path, "V");
  CHECK(W.config_hash == V.config_hash);
  CHECK(W.seed == V.seed);
  for (int i = 0; i < 100; ++i) {
    const Vec x = random_vec(rng, 5);
    CHECK(forward(W, x) == forward(V, x));
  }
  CHECK(to_text(W) == to_text(V));

  const Mlp K = make_interface_net(3, 2, 1, Box({-1.0, -2.0}, {1.0, 2.0}), {8}, 3, false);
  const Mlp K2 = from_text(to_text(K), "K");
  CHECK(K2.clamp_box.lb == K.clamp_box.lb);
  CHECK(K2.clamp_box.ub == K.clamp_box.ub);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint errors") {
  const Mlp V = make_relation_net(2, 1, {4}, 1);
  const std::string text = to_text(V);

  SUBCASE("truncated payload names both byte counts") {
    try {
      from_text(text.substr(0, text.size() - 10));
      FAIL("expected an error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("expected") != std::string::npos);
      CHECK(msg.find("found") != std::string::npos);
    }
  }
  SUBCASE("V loaded as K is rejected") {
    try {
      from_text(text, "K");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("mismatch") != std::string::npos);
    }
  }
  SUBCASE("bad magic") {
    CHECK_THROWS_AS(from_text("nsr-mlp 2\n" + text.substr(text.find('\n') + 1)), Error);
  }
  SUBCASE("bad number names the line") {
    std::string bad = text;
    const auto at = bad.find("b 4\n") + 4;
    bad.replace(at, 1, "x");
    try {
      from_text(bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load(temp_path("does_not_exist.ckpt")), Error);
  }
}

}  // TEST_SUITE
