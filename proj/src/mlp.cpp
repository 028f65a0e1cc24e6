#include "nsr/mlp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nsr/rng.hpp"

namespace nsr {

const char* head_name(Head h) {
  switch (h) {
    case Head::relu: return "relu";
    case Head::sigmoid: return "sigmoid";
    case Head::box_clamp: return "box_clamp";
  }
  return "?";
}

Head parse_head(const std::string& s) {
  if (s == "relu") return Head::relu;
  if (s == "sigmoid") return Head::sigmoid;
  if (s == "box_clamp") return Head::box_clamp;
  throw Error("unknown head '" + s + "' (expected relu, sigmoid or box_clamp)");
}

std::vector<std::size_t> Mlp::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers.empty()) return dims;
  dims.push_back(layers.front().in);
  for (const auto& L : layers) dims.push_back(L.out);
  return dims;
}

std::size_t Mlp::parameter_count() const {
  std::size_t c = 0;
  for (const auto& L : layers) c += L.W.size() + L.b.size();
  return c;
}

Mlp make_mlp(const std::vector<std::size_t>& dims, Head head, std::uint64_t seed,
             const std::string& role, Box clamp_box) {
  if (dims.size() < 2) throw Error("make_mlp: need at least input and output dims");
  for (auto d : dims) {
    if (d == 0) throw Error("make_mlp: zero-width layer");
  }
  if (head == Head::box_clamp && clamp_box.dim() != dims.back()) {
    throw Error("make_mlp: clamp box has dimension " + std::to_string(clamp_box.dim()) +
                ", output has " + std::to_string(dims.back()));
  }
  Mlp net;
  net.role = role;
  net.head = head;
  net.clamp_box = std::move(clamp_box);
  net.seed = seed;
  Rng rng(seed);
  for (std::size_t j = 0; j + 1 < dims.size(); ++j) {
    Layer L;
    L.in = dims[j];
    L.out = dims[j + 1];
    L.W.resize(L.in * L.out);
    L.b.assign(L.out, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(L.in));
    for (auto& w : L.W) w = rng.uniform(-scale, scale);
    net.layers.push_back(std::move(L));
  }
  return net;
}

Mlp make_relation_net(std::size_t n, std::size_t n_hat, const std::vector<std::size_t>& hidden,
                      std::uint64_t seed) {
  std::vector<std::size_t> dims{n + n_hat};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return make_mlp(dims, Head::sigmoid, seed, "V");
}

Mlp make_interface_net(std::size_t n, std::size_t n_hat, std::size_t m_hat, const Box& input_set,
                       const std::vector<std::size_t>& hidden, std::uint64_t seed,
                       bool passthrough) {
  const std::size_t m = input_set.dim();
  std::vector<std::size_t> dims{n + n_hat + m_hat};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(m);
  Mlp net = make_mlp(dims, Head::box_clamp, seed, "K", input_set);
  if (!passthrough) return net;

  const std::size_t r = std::min(m, m_hat);
  for (auto h : hidden) {
    if (h < 2 * r) throw Error("pass-through interface needs hidden width >= 2*min(m, m_hat)");
  }
  for (auto& L : net.layers) {
    for (auto& w : L.W) w *= 0.05;
  }
  const std::size_t u_offset = n + n_hat;
  for (std::size_t j = 0; j < net.layers.size(); ++j) {
    Layer& L = net.layers[j];
    const bool first = j == 0, last = j + 1 == net.layers.size();
    if (last) {
      for (std::size_t c = 0; c < r; ++c) {
        for (std::size_t k = 0; k < L.in; ++k) L.w(c, k) = 0.0;
        L.w(c, 2 * c) = 1.0;
        L.w(c, 2 * c + 1) = -1.0;
      }
      continue;
    }
    for (std::size_t c = 0; c < 2 * r; ++c) {
      for (std::size_t k = 0; k < L.in; ++k) L.w(c, k) = 0.0;
    }
    for (std::size_t c = 0; c < r; ++c) {
      if (first) {
        L.w(2 * c, u_offset + c) = 1.0;
        L.w(2 * c + 1, u_offset + c) = -1.0;
      } else {
        L.w(2 * c, 2 * c) = 1.0;
        L.w(2 * c + 1, 2 * c + 1) = 1.0;
      }
    }
  }
  // Rows outside the pass-through channels do not read them.
  for (std::size_t j = 1; j < net.layers.size(); ++j) {
    Layer& L = net.layers[j];
    const bool last = j + 1 == net.layers.size();
    const std::size_t first_row = last ? r : 2 * r;
    for (std::size_t row = first_row; row < L.out; ++row) {
      for (std::size_t c = 0; c < 2 * r; ++c) L.w(row, c) = 0.0;
    }
  }
  return net;
}

Mlp zeros_like(const Mlp& net) {
  Mlp z = net;
  for (auto& L : z.layers) {
    std::fill(L.W.begin(), L.W.end(), 0.0);
    std::fill(L.b.begin(), L.b.end(), 0.0);
  }
  return z;
}

namespace {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

void check_input(const Mlp& net, ConstSpan input) {
  if (net.layers.empty()) throw Error("forward: network has no layers");
  if (input.size() != net.input_dim()) {
    throw Error("forward: input has length " + std::to_string(input.size()) + ", network " +
                net.role + " expects " + std::to_string(net.input_dim()));
  }
}

inline void affine(const Layer& L, const double* in, double* out) {
  for (std::size_t r = 0; r < L.out; ++r) {
    const double* row = L.W.data() + r * L.in;
    double acc = L.b[r];
    for (std::size_t c = 0; c < L.in; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

void apply_head(const Mlp& net, MutSpan z) {
  switch (net.head) {
    case Head::relu:
      for (auto& v : z) v = v > 0 ? v : 0.0;
      break;
    case Head::sigmoid:
      for (auto& v : z) v = sigmoid(v);
      break;
    case Head::box_clamp:
      net.clamp_box.clamp_in_place(z);
      break;
  }
}

}  // namespace

Vec forward(const Mlp& net, ConstSpan input, ForwardCache& cache) {
  check_input(net, input);
  const std::size_t L = net.layers.size();
  cache.pre.resize(L);
  cache.post.resize(L + 1);
  cache.post[0].assign(input.begin(), input.end());
  for (std::size_t j = 0; j < L; ++j) {
    const Layer& layer = net.layers[j];
    cache.pre[j].resize(layer.out);
    affine(layer, cache.post[j].data(), cache.pre[j].data());
    cache.post[j + 1] = cache.pre[j];
    if (j + 1 < L) {
      for (auto& v : cache.post[j + 1]) v = v > 0 ? v : 0.0;
    } else {
      apply_head(net, cache.post[j + 1]);
    }
  }
  return cache.post[L];
}

Vec forward(const Mlp& net, ConstSpan input) {
  ForwardCache cache;
  return forward(net, input, cache);
}

double forward_scalar(const Mlp& net, ConstSpan input, Vec& a, Vec& b) {
  check_input(net, input);
  a.assign(input.begin(), input.end());
  const std::size_t L = net.layers.size();
  for (std::size_t j = 0; j < L; ++j) {
    const Layer& layer = net.layers[j];
    b.resize(layer.out);
    affine(layer, a.data(), b.data());
    if (j + 1 < L) {
      for (auto& v : b) v = v > 0 ? v : 0.0;
    } else {
      apply_head(net, b);
    }
    std::swap(a, b);
  }
  return a[0];
}

Gradients Gradients::zeros_like(const Mlp& net) {
  Gradients g;
  for (const auto& L : net.layers) {
    g.dW.emplace_back(L.W.size(), 0.0);
    g.db.emplace_back(L.b.size(), 0.0);
  }
  g.d_input.assign(net.input_dim(), 0.0);
  return g;
}

void Gradients::add(const Gradients& o) {
  for (std::size_t j = 0; j < dW.size(); ++j) {
    for (std::size_t k = 0; k < dW[j].size(); ++k) dW[j][k] += o.dW[j][k];
    for (std::size_t k = 0; k < db[j].size(); ++k) db[j][k] += o.db[j][k];
  }
  for (std::size_t k = 0; k < d_input.size() && k < o.d_input.size(); ++k) d_input[k] += o.d_input[k];
}

void Gradients::scale(double s) {
  for (auto& v : dW) for (auto& x : v) x *= s;
  for (auto& v : db) for (auto& x : v) x *= s;
  for (auto& x : d_input) x *= s;
}

bool Gradients::finite() const {
  auto ok = [](const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return std::all_of(dW.begin(), dW.end(), ok) && std::all_of(db.begin(), db.end(), ok);
}

void backward(const Mlp& net, const ForwardCache& cache, ConstSpan upstream, Gradients& grads) {
  const std::size_t L = net.layers.size();
  if (cache.pre.size() != L || cache.post.size() != L + 1) {
    throw Error("backward: forward cache does not match the network");
  }
  if (upstream.size() != net.output_dim()) throw Error("backward: upstream gradient size mismatch");
  if (grads.dW.size() != L) grads = Gradients::zeros_like(net);

  Vec delta(upstream.begin(), upstream.end());
  const Vec& z_last = cache.pre[L - 1];
  for (std::size_t r = 0; r < delta.size(); ++r) {
    switch (net.head) {
      case Head::relu:
        if (!(z_last[r] > 0)) delta[r] = 0.0;
        break;
      case Head::sigmoid: {
        const double p = cache.post[L][r];
        delta[r] *= p * (1.0 - p);
        break;
      }
      case Head::box_clamp:
        if (z_last[r] < net.clamp_box.lb[r] || z_last[r] > net.clamp_box.ub[r]) delta[r] = 0.0;
        break;
    }
  }
  Vec prev;
  for (std::size_t j = L; j-- > 0;) {
    const Layer& layer = net.layers[j];
    const Vec& in = cache.post[j];
    Vec& dW = grads.dW[j];
    Vec& db = grads.db[j];
    prev.assign(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      db[r] += d;
      double* gw = dW.data() + r * layer.in;
      const double* w = layer.W.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) {
        gw[c] += d * in[c];
        prev[c] += d * w[c];
      }
    }
    if (j > 0) {
      const Vec& z = cache.pre[j - 1];
      for (std::size_t c = 0; c < layer.in; ++c) {
        if (!(z[c] > 0)) prev[c] = 0.0;
      }
    }
    delta.swap(prev);
  }
  if (grads.d_input.size() != delta.size()) grads.d_input.assign(delta.size(), 0.0);
  for (std::size_t c = 0; c < delta.size(); ++c) grads.d_input[c] += delta[c];
}

Gradients backward(const Mlp& net, const ForwardCache& cache, ConstSpan upstream) {
  Gradients g = Gradients::zeros_like(net);
  backward(net, cache, upstream, g);
  return g;
}

namespace {

double head_factor(Head h) { return h == Head::sigmoid ? 0.25 : 1.0; }

std::pair<double, std::size_t> inf_norm_row(const Layer& L) {
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t r = 0; r < L.out; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < L.in; ++c) s += std::abs(L.w(r, c));
    if (s > best) {
      best = s;
      arg = r;
    }
  }
  return {best, arg};
}

}  // namespace

double lipschitz_upper_bound(const Mlp& net) {
  double bound = head_factor(net.head);
  for (const auto& L : net.layers) bound *= inf_norm_row(L).first;
  return bound;
}

double spectral_lipschitz_bound(const Mlp& net) {
  double bound = head_factor(net.head);
  for (const auto& L : net.layers) {
    // Pseudo-random start: a constant vector can sit in the null space of
    // the +/- channel pairs of a pass-through interface.
    Rng rng(0x5eed + L.in * 131 + L.out);
    Vec v(L.in), w(L.out);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    double sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
      affine(Layer{L.in, L.out, L.W, Vec(L.out, 0.0)}, v.data(), w.data());
      Vec next(L.in, 0.0);
      for (std::size_t r = 0; r < L.out; ++r)
        for (std::size_t c = 0; c < L.in; ++c) next[c] += L.w(r, c) * w[r];
      double norm = 0.0;
      for (double x : next) norm += x * x;
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        sigma = 0.0;
        break;
      }
      sigma = std::sqrt(norm);
      for (std::size_t c = 0; c < L.in; ++c) v[c] = next[c] / norm;
    }
    bound *= sigma;
  }
  return bound;
}

void add_log_lipschitz_gradient(const Mlp& net, double weight, Gradients& grads) {
  if (grads.dW.size() != net.layers.size()) grads = Gradients::zeros_like(net);
  for (std::size_t j = 0; j < net.layers.size(); ++j) {
    const Layer& L = net.layers[j];
    auto [norm, row] = inf_norm_row(L);
    if (norm <= 0.0) continue;
    for (std::size_t c = 0; c < L.in; ++c) {
      const double w = L.w(row, c);
      const double s = w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0);
      grads.dW[j][row * L.in + c] += weight * s / norm;
    }
  }
}

TrainState TrainState::for_net(const Mlp& net, double lr, std::uint64_t seed) {
  TrainState s;
  s.lr = lr;
  s.seed = seed;
  for (const auto& L : net.layers) {
    s.mW.emplace_back(L.W.size(), 0.0);
    s.vW.emplace_back(L.W.size(), 0.0);
    s.mb.emplace_back(L.b.size(), 0.0);
    s.vb.emplace_back(L.b.size(), 0.0);
  }
  return s;
}

void optimizer_step(Mlp& net, const Gradients& grads, TrainState& s) {
  if (!grads.finite()) throw NonFiniteGradient("optimizer_step: non-finite gradient");
  if (grads.dW.size() != net.layers.size() || s.mW.size() != net.layers.size()) {
    throw Error("optimizer_step: gradient/state shape mismatch");
  }
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  auto update = [&](Vec& p, const Vec& g, Vec& m, Vec& v) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
      v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
      const double mh = m[k] / c1, vh = v[k] / c2;
      p[k] -= s.lr * mh / (std::sqrt(vh) + s.eps);
    }
  };
  for (std::size_t j = 0; j < net.layers.size(); ++j) {
    update(net.layers[j].W, grads.dW[j], s.mW[j], s.vW[j]);
    update(net.layers[j].b, grads.db[j], s.mb[j], s.vb[j]);
  }
}

// ---------------------------------------------------------------- checkpoint

std::string to_text(const Mlp& net) {
  std::ostringstream payload;
  for (std::size_t j = 0; j < net.layers.size(); ++j) {
    const Layer& L = net.layers[j];
    payload << "W " << L.out << ' ' << L.in << '\n';
    for (std::size_t r = 0; r < L.out; ++r) {
      for (std::size_t c = 0; c < L.in; ++c) payload << (c ? " " : "") << fmt_double(L.w(r, c));
      payload << '\n';
    }
    payload << "b " << L.out << '\n';
    for (std::size_t r = 0; r < L.out; ++r) payload << (r ? " " : "") << fmt_double(L.b[r]);
    payload << '\n';
  }
  const std::string body = payload.str();

  std::ostringstream os;
  os << "nsr-mlp 1\n";
  os << "role: " << net.role << '\n';
  os << "head: " << head_name(net.head) << '\n';
  os << "layer_dims:";
  for (auto d : net.layer_dims()) os << ' ' << d;
  os << '\n';
  if (net.head == Head::box_clamp) {
    os << "clamp_lb:";
    for (double v : net.clamp_box.lb) os << ' ' << fmt_double(v);
    os << "\nclamp_ub:";
    for (double v : net.clamp_box.ub) os << ' ' << fmt_double(v);
    os << '\n';
  }
  os << "seed: " << net.seed << '\n';
  os << "config_hash: " << (net.config_hash.empty() ? "-" : net.config_hash) << '\n';
  os << "payload_bytes: " << body.size() << '\n';
  os << "---\n";
  os << body;
  return os.str();
}

void save(const Mlp& net, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("save: cannot open '" + path + "' for writing");
  f << to_text(net);
  if (!f) throw Error("save: write to '" + path + "' failed");
}

namespace {

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  if (tok == "nan") return NAN;
  if (tok == "inf") return INFINITY;
  if (tok == "-inf") return -INFINITY;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw Error("checkpoint line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::uint64_t parse_uint(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw Error("checkpoint line " + std::to_string(line) + ": bad integer '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

Mlp from_text(const std::string& text, std::optional<std::string> expected_role) {
  std::size_t pos = 0, line_no = 0;
  auto next_line = [&](std::string_view& out) {
    if (pos >= text.size()) return false;
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    out = std::string_view(text).substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    return true;
  };
  std::string_view line;
  if (!next_line(line) || line != "nsr-mlp 1") throw Error("checkpoint line 1: missing 'nsr-mlp 1' magic");

  Mlp net;
  std::vector<std::size_t> dims;
  Vec clamp_lb, clamp_ub;
  std::optional<std::size_t> payload_bytes;
  bool have_role = false, have_head = false;
  while (true) {
    if (!next_line(line)) throw Error("checkpoint: header ends before '---' (line " + std::to_string(line_no) + ")");
    if (line == "---") break;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error("checkpoint line " + std::to_string(line_no) + ": expected 'key: value'");
    }
    const std::string_view key = line.substr(0, colon);
    const auto vals = split_ws(line.substr(colon + 1));
    if (key == "role") {
      if (vals.size() != 1) throw Error("checkpoint line " + std::to_string(line_no) + ": bad role");
      net.role = std::string(vals[0]);
      have_role = true;
    } else if (key == "head") {
      if (vals.size() != 1) throw Error("checkpoint line " + std::to_string(line_no) + ": bad head");
      net.head = parse_head(std::string(vals[0]));
      have_head = true;
    } else if (key == "layer_dims") {
      for (auto v : vals) dims.push_back(parse_uint(v, line_no));
    } else if (key == "clamp_lb") {
      for (auto v : vals) clamp_lb.push_back(parse_double(v, line_no));
    } else if (key == "clamp_ub") {
      for (auto v : vals) clamp_ub.push_back(parse_double(v, line_no));
    } else if (key == "seed") {
      if (vals.size() != 1) throw Error("checkpoint line " + std::to_string(line_no) + ": bad seed");
      net.seed = parse_uint(vals[0], line_no);
    } else if (key == "config_hash") {
      net.config_hash = vals.empty() || vals[0] == "-" ? "" : std::string(vals[0]);
    } else if (key == "payload_bytes") {
      if (vals.size() != 1) throw Error("checkpoint line " + std::to_string(line_no) + ": bad payload_bytes");
      payload_bytes = parse_uint(vals[0], line_no);
    } else {
      throw Error("checkpoint line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_role || !have_head || dims.size() < 2 || !payload_bytes) {
    throw Error("checkpoint: header missing role, head, layer_dims or payload_bytes");
  }
  const std::size_t found = text.size() - std::min(pos, text.size());
  if (found != *payload_bytes) {
    throw Error("checkpoint truncated or padded: expected " + std::to_string(*payload_bytes) +
                " payload bytes, found " + std::to_string(found));
  }
  if (expected_role && net.role != *expected_role) {
    throw Error("checkpoint role mismatch: file holds " + net.role + ", expected " + *expected_role);
  }
  const Head expected_head = net.role == "V" ? Head::sigmoid : (net.role == "K" ? Head::box_clamp : net.head);
  if (expected_role && net.head != expected_head) {
    throw Error(std::string("checkpoint head mismatch: file has ") + head_name(net.head) +
                ", role " + net.role + " needs " + head_name(expected_head));
  }
  if (net.head == Head::box_clamp) {
    if (clamp_lb.size() != dims.back() || clamp_ub.size() != dims.back()) {
      throw Error("checkpoint: clamp box dimension does not match output dimension " +
                  std::to_string(dims.back()));
    }
    net.clamp_box = Box(clamp_lb, clamp_ub);
  }

  for (std::size_t j = 0; j + 1 < dims.size(); ++j) {
    Layer L;
    L.in = dims[j];
    L.out = dims[j + 1];
    if (!next_line(line)) throw Error("checkpoint: missing W header for layer " + std::to_string(j));
    auto hdr = split_ws(line);
    if (hdr.size() != 3 || hdr[0] != "W" || parse_uint(hdr[1], line_no) != L.out ||
        parse_uint(hdr[2], line_no) != L.in) {
      throw Error("checkpoint line " + std::to_string(line_no) + ": expected 'W " +
                  std::to_string(L.out) + " " + std::to_string(L.in) + "'");
    }
    L.W.reserve(L.in * L.out);
    for (std::size_t r = 0; r < L.out; ++r) {
      if (!next_line(line)) throw Error("checkpoint: layer " + std::to_string(j) + " ends early");
      auto toks = split_ws(line);
      if (toks.size() != L.in) {
        throw Error("checkpoint line " + std::to_string(line_no) + ": expected " +
                    std::to_string(L.in) + " weights, found " + std::to_string(toks.size()));
      }
      for (auto t : toks) L.W.push_back(parse_double(t, line_no));
    }
    if (!next_line(line)) throw Error("checkpoint: missing b header for layer " + std::to_string(j));
    hdr = split_ws(line);
    if (hdr.size() != 2 || hdr[0] != "b" || parse_uint(hdr[1], line_no) != L.out) {
      throw Error("checkpoint line " + std::to_string(line_no) + ": expected 'b " + std::to_string(L.out) + "'");
    }
    if (!next_line(line)) throw Error("checkpoint: missing biases for layer " + std::to_string(j));
    auto toks = split_ws(line);
    if (toks.size() != L.out) {
      throw Error("checkpoint line " + std::to_string(line_no) + ": expected " +
                  std::to_string(L.out) + " biases, found " + std::to_string(toks.size()));
    }
    for (auto t : toks) L.b.push_back(parse_double(t, line_no));
    net.layers.push_back(std::move(L));
  }
  if (pos < text.size()) throw Error("checkpoint line " + std::to_string(line_no + 1) + ": trailing data");
  return net;
}

Mlp load(const std::string& path, std::optional<std::string> expected_role) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("load: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return from_text(ss.str(), std::move(expected_role));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace nsr
