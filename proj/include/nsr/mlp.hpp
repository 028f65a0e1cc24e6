#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsr/types.hpp"

namespace nsr {

/// Output transform applied after the last affine layer.
///  - relu: the last layer is ReLU like every hidden layer (the plain
///    "y_j = relu(W_j y_{j-1} + b_j) for every j" network).
///  - sigmoid: logistic squashing onto [0,1]; used by the relation classifier V.
///  - box_clamp: hard clamp into a box; used by the interface K.
enum class Head { relu, sigmoid, box_clamp };

const char* head_name(Head h);
Head parse_head(const std::string& s);

/// Dense layer, W is row-major (out x in).
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  Vec W;
  Vec b;

  double& w(std::size_t r, std::size_t c) { return W[r * in + c]; }
  double w(std::size_t r, std::size_t c) const { return W[r * in + c]; }
};

/// Fully connected ReLU network.
struct Mlp {
  std::string role = "V";  // "V" or "K"
  Head head = Head::sigmoid;
  Box clamp_box;  // used by Head::box_clamp
  std::vector<Layer> layers;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::vector<std::size_t> layer_dims() const;
  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
Mlp make_mlp(const std::vector<std::size_t>& layer_dims, Head head, std::uint64_t seed,
             const std::string& role = "V", Box clamp_box = {});

/// Relation classifier: (x, x_hat) -> [0,1].
Mlp make_relation_net(std::size_t n, std::size_t n_hat, const std::vector<std::size_t>& hidden,
                      std::uint64_t seed);

/// Interface: (x, x_hat, u_hat) -> U. With `passthrough`, u_hat components
/// 0..min(m, m_hat)-1 are routed to the output through +/- ReLU channel pairs
/// and all other weights start small, so K(x, x_hat, u_hat) ~= u_hat.
Mlp make_interface_net(std::size_t n, std::size_t n_hat, std::size_t m_hat, const Box& input_set,
                       const std::vector<std::size_t>& hidden, std::uint64_t seed,
                       bool passthrough);

/// Same architecture, every weight and bias zero. With a box_clamp head whose
/// box contains 0 this is the zero interface.
Mlp zeros_like(const Mlp& net);

/// Activations kept for backward().
struct ForwardCache {
  std::vector<Vec> pre;   // pre-activation per layer
  std::vector<Vec> post;  // post[0] = input, post[j+1] = output of layer j (after head on last)
};

Vec forward(const Mlp& net, ConstSpan input);
Vec forward(const Mlp& net, ConstSpan input, ForwardCache& cache);
/// Scalar forward for single-output nets, no allocation beyond two scratch buffers.
double forward_scalar(const Mlp& net, ConstSpan input, Vec& scratch_a, Vec& scratch_b);

/// Gradients with the same shapes as the parameters.
struct Gradients {
  std::vector<Vec> dW;
  std::vector<Vec> db;
  Vec d_input;

  static Gradients zeros_like(const Mlp& net);
  void add(const Gradients& other);
  void scale(double s);
  bool finite() const;
};

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
/// ReLU and clamp use subgradient 0 at and beyond their kinks; inside the
/// clamp box the gradient passes through.
void backward(const Mlp& net, const ForwardCache& cache, ConstSpan upstream, Gradients& grads);
Gradients backward(const Mlp& net, const ForwardCache& cache, ConstSpan upstream);

/// prod_j ||W_j||_inf (max absolute row sum) times the head factor
/// (sigmoid 1/4, relu/clamp 1). A valid inf-norm Lipschitz bound.
double lipschitz_upper_bound(const Mlp& net);
/// prod_j ||W_j||_2 (largest singular value by power iteration), head factor
/// included. Reported for reference only.
double spectral_lipschitz_bound(const Mlp& net);

/// Adds the subgradient of log(lipschitz_upper_bound) times `weight` to grads.
void add_log_lipschitz_gradient(const Mlp& net, double weight, Gradients& grads);

/// Adaptive-moment optimizer state.
struct TrainState {
  std::vector<Vec> mW, vW, mb, vb;
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;

  static TrainState for_net(const Mlp& net, double lr, std::uint64_t seed = 0);
};

/// Thrown by optimizer_step on NaN/inf gradients.
class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

void optimizer_step(Mlp& net, const Gradients& grads, TrainState& state);

/// Text checkpoint:
///   nsr-mlp 1
///   role: V|K
///   head: sigmoid|box_clamp|relu
///   layer_dims: 4 20 20 1
///   clamp_lb: ... / clamp_ub: ...   (box_clamp only)
///   seed: <uint>
///   config_hash: <hex or ->
///   payload_bytes: <N>
///   ---
///   <N bytes: per layer "W <out> <in>" then rows, "b <out>" then values;
///    shortest round-trip decimals, so save/load is bit-exact>
void save(const Mlp& net, const std::string& path);
std::string to_text(const Mlp& net);
/// Throws Error naming the line (or expected vs. found byte counts) on malformed input.
Mlp load(const std::string& path, std::optional<std::string> expected_role = std::nullopt);
Mlp from_text(const std::string& text, std::optional<std::string> expected_role = std::nullopt);

}  // namespace nsr
