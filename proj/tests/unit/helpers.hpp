#pragma once

#include "nsr/cover.hpp"
#include "nsr/mlp.hpp"
#include "nsr/system.hpp"
#include "nsr/train_config.hpp"

namespace nsr::test {

// 1-D x+ = a x + b u, y = x, on [lo, hi] with U = [-1, 1].
inline SystemDef line_system(double a, double b, double lo, double hi) {
  SystemDef s = system_from_dynamics("scalar_linear", {{"a", a}, {"b", b}});
  s.state_set = Box({lo}, {hi});
  s.initial_set = s.state_set;
  s.output_set = s.state_set;
  return s;
}

// Single affine layer with zero weights: outputs `value` through `head`.
inline Mlp constant_net(std::size_t inputs, double value, Head head = Head::relu) {
  Mlp net = make_mlp({inputs, 1}, head, 0);
  std::fill(net.layers[0].W.begin(), net.layers[0].W.end(), 0.0);
  net.layers[0].b[0] = value;
  return net;
}

// Exact interface u = clamp(u_hat) through a +/- ReLU pair per input component.
inline Mlp exact_passthrough(std::size_t n, std::size_t n_hat, std::size_t m_hat, const Box& U) {
  const std::size_t in = n + n_hat + m_hat, m = U.dim();
  Mlp K = make_mlp({in, 2 * m_hat, m}, Head::box_clamp, 0, "K", U);
  for (auto& L : K.layers) {
    std::fill(L.W.begin(), L.W.end(), 0.0);
    std::fill(L.b.begin(), L.b.end(), 0.0);
  }
  for (std::size_t j = 0; j < m_hat; ++j) {
    K.layers[0].w(2 * j, n + n_hat + j) = 1.0;
    K.layers[0].w(2 * j + 1, n + n_hat + j) = -1.0;
    if (j < m) {
      K.layers[1].w(j, 2 * j) = 1.0;
      K.layers[1].w(j, 2 * j + 1) = -1.0;
    }
  }
  return K;
}

// V(x, x_hat) = relu(1 - k |x - x_hat|) for scalar states.
inline Mlp diagonal_net(double k) {
  Mlp V = make_mlp({2, 2, 1}, Head::relu, 0);
  V.layers[0].W = {1.0, -1.0, -1.0, 1.0};
  V.layers[0].b = {0.0, 0.0};
  V.layers[1].W = {-k, -k};
  V.layers[1].b = {1.0};
  return V;
}

}  // namespace nsr::test
