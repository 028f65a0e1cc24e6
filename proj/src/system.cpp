#include "nsr/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nsr/rng.hpp"

namespace nsr {

Vec SystemDef::step(ConstSpan x, ConstSpan u) const {
  if (x.size() != n) throw Error(name + ".step: state has length " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(n));
  if (u.size() != m) throw Error(name + ".step: input has length " + std::to_string(u.size()) +
                                 ", expected " + std::to_string(m));
  Vec out(n);
  step_fn(x, u, out);
  return out;
}

Vec SystemDef::output(ConstSpan x) const {
  if (x.size() != n) throw Error(name + ".output: state has length " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(n));
  Vec out(l);
  output_fn(x, out);
  return out;
}

void SystemDef::validate() const {
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw Error("system " + name + ": " + what);
  };
  need(n > 0 && m > 0 && l > 0, "dimensions must be positive");
  need(state_set.dim() == n, "state_set dimension != n");
  need(initial_set.dim() == n, "initial_set dimension != n");
  need(input_set.dim() == m, "input_set dimension != m");
  need(output_set.dim() == l, "output_set dimension != l");
  need(state_set.contains(initial_set), "initial_set is not contained in state_set");
  need(static_cast<bool>(step_fn), "missing step evaluator");
  need(static_cast<bool>(output_fn), "missing output evaluator");
  need(lipschitz.x >= 0 && lipschitz.u >= 0 && lipschitz.h >= 0,
       "Lipschitz constants must be nonnegative");
  for (auto c : output_coords) need(c < n, "output coordinate out of range");
}

namespace {

OutputFn projection(std::vector<std::size_t> coords) {
  return [coords](ConstSpan x, MutSpan y) {
    for (std::size_t i = 0; i < coords.size(); ++i) y[i] = x[coords[i]];
  };
}

double param(const std::map<std::string, double>& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

// Source car: x+ = x + tau (sin x3, cos x3, u).
SystemDef make_vehicle3d(const std::map<std::string, double>& p) {
  SystemDef s;
  s.name = "vehicle3d";
  s.dynamics = "vehicle3d";
  s.n = 3;
  s.m = 1;
  s.l = 2;
  s.tau = param(p, "tau", 0.1);
  s.params = {{"tau", s.tau}};
  s.state_set = Box({-2.0, 0.0, -1.0}, {3.0, 8.0, 1.0});
  s.initial_set = Box({-2.0, 0.0, -1.0}, {-1.0, 2.0, 1.0});
  s.input_set = Box({-0.5}, {0.5});
  s.output_set = Box({-2.0, 0.0}, {3.0, 8.0});
  const double tau = s.tau;
  s.step_fn = [tau](ConstSpan x, ConstSpan u, MutSpan out) {
    out[0] = x[0] + tau * std::sin(x[2]);
    out[1] = x[1] + tau * std::cos(x[2]);
    out[2] = x[2] + tau * u[0];
  };
  s.output_coords = {0, 1};
  s.output_fn = projection(s.output_coords);
  s.lipschitz = {1.1, 0.1, 1.0};
  return s;
}

// Target car, state (x1, x2, delta, v, psi), inputs (acceleration-like, steering-like).
SystemDef make_vehicle5d(const std::map<std::string, double>& p) {
  SystemDef s;
  s.name = "vehicle5d";
  s.dynamics = "vehicle5d";
  s.n = 5;
  s.m = 2;
  s.l = 2;
  s.tau = param(p, "tau", 0.1);
  s.params = {{"tau", s.tau}};
  s.state_set = Box({-2.0, 0.0, -1.0, -1.0, -1.0}, {3.0, 8.0, 1.0, 1.0, 1.0});
  s.initial_set = Box({-2.0, 0.0, -1.0, -1.0, -1.0}, {-1.0, 2.0, 1.0, 1.0, 1.0});
  s.input_set = Box::uniform(2, -1.0, 1.0);
  s.output_set = Box({-2.0, 0.0}, {3.0, 8.0});
  const double tau = s.tau;
  s.step_fn = [tau](ConstSpan x, ConstSpan u, MutSpan out) {
    const double delta = x[2], v = x[3], psi = x[4];
    out[0] = x[0] + tau * v * std::sin(psi);
    out[1] = x[1] + tau * v * std::cos(psi);
    out[2] = delta + tau * u[0];
    out[3] = v + tau * u[1];
    out[4] = psi + tau * v * std::tan(delta);
  };
  s.output_coords = {0, 1};
  s.output_fn = projection(s.output_coords);
  s.lipschitz = {1.1, 0.1, 1.0};
  return s;
}

// Source inverted pendulum (theta, omega), input gain 9.1.
SystemDef make_pendulum(const std::map<std::string, double>& p) {
  SystemDef s;
  s.name = "pendulum";
  s.dynamics = "pendulum";
  s.n = 2;
  s.m = 1;
  s.l = 2;
  s.tau = param(p, "tau", 0.01);
  const double g = param(p, "g", 9.8);
  const double gain = param(p, "gain", 9.1);
  s.params = {{"tau", s.tau}, {"g", g}, {"gain", gain}};
  s.state_set = Box::uniform(2, -0.5, 0.5);
  s.initial_set = s.state_set;
  s.input_set = Box({-1.0}, {1.0});
  s.output_set = s.state_set;
  const double tau = s.tau;
  s.step_fn = [tau, g, gain](ConstSpan x, ConstSpan u, MutSpan out) {
    out[0] = x[0] + tau * x[1];
    out[1] = x[1] + tau * g * std::sin(x[0]) + tau * gain * u[0];
  };
  s.output_coords = {0, 1};
  s.output_fn = projection(s.output_coords);
  s.lipschitz = {1.098, 0.091, 1.0};
  return s;
}

// Simplified double inverted pendulum (theta1, omega1, theta2, omega2), input
// gains 30 and 39, output (theta1, omega1). Velocity updates are decoupled as
// in the published discretization.
SystemDef make_double_pendulum(const std::map<std::string, double>& p) {
  SystemDef s;
  s.name = "double_pendulum";
  s.dynamics = "double_pendulum";
  s.n = 4;
  s.m = 2;
  s.l = 2;
  s.tau = param(p, "tau", 0.01);
  const double g = param(p, "g", 9.8);
  const double gain1 = param(p, "gain1", 30.0);
  const double gain2 = param(p, "gain2", 39.0);
  s.params = {{"tau", s.tau}, {"g", g}, {"gain1", gain1}, {"gain2", gain2}};
  s.state_set = Box::uniform(4, -0.5, 0.5);
  s.initial_set = s.state_set;
  s.input_set = Box::uniform(2, -1.0, 1.0);
  s.output_set = Box::uniform(2, -0.5, 0.5);
  const double tau = s.tau;
  s.step_fn = [tau, g, gain1, gain2](ConstSpan x, ConstSpan u, MutSpan out) {
    const double th1 = x[0], w1 = x[1], th2 = x[2], w2 = x[3];
    const double coupling = std::sin(th1 - th2);
    out[0] = th1 + tau * w1;
    out[1] = w1 + tau * (g * std::sin(th1) - coupling * w1 * w1) + tau * gain1 * u[0];
    out[2] = th2 + tau * w2;
    out[3] = w2 + tau * (g * std::sin(th2) + coupling * w2 * w2) + tau * gain2 * u[1];
  };
  s.output_coords = {0, 1};
  s.output_fn = projection(s.output_coords);
  s.lipschitz = {1.098, 0.39, 1.0};
  return s;
}

// x+ = a x + b u on [-1,1], y = x.
SystemDef make_scalar_linear(const std::map<std::string, double>& p) {
  SystemDef s;
  s.name = "scalar_linear";
  s.dynamics = "scalar_linear";
  s.n = 1;
  s.m = 1;
  s.l = 1;
  const double a = param(p, "a", 0.5);
  const double b = param(p, "b", 0.1);
  s.params = {{"a", a}, {"b", b}};
  s.state_set = Box({-1.0}, {1.0});
  s.initial_set = s.state_set;
  s.input_set = Box({-1.0}, {1.0});
  s.output_set = s.state_set;
  s.step_fn = [a, b](ConstSpan x, ConstSpan u, MutSpan out) { out[0] = a * x[0] + b * u[0]; };
  s.output_coords = {0};
  s.output_fn = projection(s.output_coords);
  s.lipschitz = {std::abs(a), std::abs(b), 1.0};
  return s;
}

using Factory = SystemDef (*)(const std::map<std::string, double>&);

const std::map<std::string, Factory>& registry() {
  static const std::map<std::string, Factory> r = {
      {"vehicle5d", &make_vehicle5d},
      {"vehicle3d", &make_vehicle3d},
      {"double_pendulum", &make_double_pendulum},
      {"pendulum", &make_pendulum},
      {"scalar_linear", &make_scalar_linear},
  };
  return r;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

}  // namespace

const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names = {"vehicle5d", "vehicle3d", "double_pendulum",
                                                 "pendulum"};
  return names;
}

const std::vector<std::string>& dynamics_names() {
  static const std::vector<std::string> names = {"vehicle5d", "vehicle3d", "double_pendulum",
                                                 "pendulum", "scalar_linear"};
  return names;
}

SystemDef builtin_system(const std::string& name) {
  const auto& names = builtin_system_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error("unknown system '" + name + "'; valid names: " + join(names));
  }
  return registry().at(name)({});
}

SystemDef system_from_dynamics(const std::string& dynamics,
                               const std::map<std::string, double>& params) {
  auto it = registry().find(dynamics);
  if (it == registry().end()) {
    throw Error("unknown dynamics '" + dynamics + "'; valid names: " + join(dynamics_names()));
  }
  return it->second(params);
}

Vec ControllerDef::operator()(ConstSpan xh, std::uint64_t t) const {
  Vec u(input_set.dim(), 0.0);
  policy(xh, t, u);
  input_set.clamp_in_place(u);
  return u;
}

namespace {

// "name(a,b)" -> name, {a, b}
std::pair<std::string, std::vector<double>> parse_call(const std::string& spec) {
  auto open = spec.find('(');
  if (open == std::string::npos) return {spec, {}};
  if (spec.back() != ')') throw Error("controller spec '" + spec + "': missing ')'");
  std::string name = spec.substr(0, open);
  std::string args = spec.substr(open + 1, spec.size() - open - 2);
  std::vector<double> vals;
  std::stringstream ss(args);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
    } catch (const std::exception&) {
      throw Error("controller spec '" + spec + "': bad argument '" + tok + "'");
    }
  }
  return {name, vals};
}

}  // namespace

ControllerDef builtin_controller(const std::string& spec, const SystemDef& source) {
  auto [name, args] = parse_call(spec);
  ControllerDef c;
  c.name = spec;
  c.input_set = source.input_set;
  const std::size_t m = source.m;

  if (name == "zero") {
    c.policy = [](ConstSpan, std::uint64_t, MutSpan u) { std::fill(u.begin(), u.end(), 0.0); };
  } else if (name == "pendulum_stabilizer") {
    if (source.n < 2) throw Error("pendulum_stabilizer needs a (theta, omega) state");
    const double k1 = args.size() > 0 ? args[0] : 2.0;
    const double k2 = args.size() > 1 ? args[1] : 1.0;
    c.policy = [k1, k2](ConstSpan xh, std::uint64_t, MutSpan u) {
      u[0] = -k1 * xh[0] - k2 * xh[1];
      for (std::size_t i = 1; i < u.size(); ++i) u[i] = 0.0;
    };
  } else if (name == "vehicle_waypoint") {
    if (source.n < 3) throw Error("vehicle_waypoint needs an (x1, x2, heading) state");
    const double gx = args.size() > 0 ? args[0] : 2.5;
    const double gy = args.size() > 1 ? args[1] : 7.5;
    const double gain = args.size() > 2 ? args[2] : 2.0;
    c.policy = [gx, gy, gain](ConstSpan xh, std::uint64_t, MutSpan u) {
      // Heading is measured from the x2 axis: motion is (sin h, cos h).
      const double desired = std::atan2(gx - xh[0], gy - xh[1]);
      double diff = desired - xh[2];
      diff = std::remainder(diff, 2.0 * std::numbers::pi);
      u[0] = gain * diff;
      for (std::size_t i = 1; i < u.size(); ++i) u[i] = 0.0;
    };
  } else if (name == "random") {
    if (args.size() != 1) throw Error("random controller needs a seed: random(<seed>)");
    const auto seed = static_cast<std::uint64_t>(args[0]);
    const Box box = source.input_set;
    c.policy = [seed, box, m](ConstSpan, std::uint64_t t, MutSpan u) {
      // Stateless: the sample depends only on (seed, t).
      std::uint64_t h = splitmix64(seed ^ splitmix64(t + 0x5bd1e995ULL));
      for (std::size_t i = 0; i < m; ++i) {
        h = splitmix64(h);
        const double r = static_cast<double>(h >> 11) * 0x1.0p-53;
        u[i] = box.lb[i] + (box.ub[i] - box.lb[i]) * r;
      }
    };
  } else {
    throw Error("unknown controller '" + spec +
                "'; valid names: vehicle_waypoint, pendulum_stabilizer, zero, random(seed)");
  }
  return c;
}

LipschitzCheckReport sample_lipschitz_check(const SystemDef& sys, std::size_t pairs,
                                            std::uint64_t seed) {
  if (pairs == 0) throw Error("sample_lipschitz_check: pairs must be >= 1");
  constexpr double kSlack = 1.0 + 1e-12;
  Rng rng(seed);
  auto draw = [&](const Box& b) {
    Vec v(b.dim());
    for (std::size_t d = 0; d < b.dim(); ++d) v[d] = rng.uniform(b.lb[d], b.ub[d]);
    return v;
  };
  LipschitzCheckReport r;
  r.pairs = pairs;
  Vec fx(sys.n), fx2(sys.n), hx(sys.l), hx2(sys.l);
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vec x = draw(sys.state_set), x2 = draw(sys.state_set);
    const Vec u = draw(sys.input_set), u2 = draw(sys.input_set);
    sys.step_fn(x, u, fx);
    sys.step_fn(x2, u2, fx2);
    sys.output_fn(x, hx);
    sys.output_fn(x2, hx2);
    const double dx = inf_dist(x, x2), du = inf_dist(u, u2);

    const double num_f = inf_dist(fx, fx2);
    const double den_f = sys.lipschitz.x * dx + sys.lipschitz.u * du;
    if (dx == 0.0 && du == 0.0) {
      ++r.skipped_f;
    } else {
      const double ratio = den_f > 0 ? num_f / den_f : (num_f > 0 ? INFINITY : 0.0);
      r.max_ratio_f = std::max(r.max_ratio_f, ratio);
      if (ratio > kSlack) ++r.violations_f;
    }

    if (dx == 0.0) {
      ++r.skipped_h;
    } else {
      const double num_h = inf_dist(hx, hx2);
      const double den_h = sys.lipschitz.h * dx;
      const double ratio = den_h > 0 ? num_h / den_h : (num_h > 0 ? INFINITY : 0.0);
      r.max_ratio_h = std::max(r.max_ratio_h, ratio);
      if (ratio > kSlack) ++r.violations_h;
    }
  }
  return r;
}

std::string describe(const SystemDef& s) {
  std::ostringstream os;
  auto box = [](const Box& b) {
    std::string out;
    for (std::size_t d = 0; d < b.dim(); ++d) {
      if (d) out += " x ";
      out += "[" + fmt_double(b.lb[d]) + ", " + fmt_double(b.ub[d]) + "]";
    }
    return out;
  };
  os << "name = " << s.name << "\n"
     << "dynamics = " << s.dynamics << "\n"
     << "n = " << s.n << "\nm = " << s.m << "\nl = " << s.l << "\n"
     << "tau = " << fmt_double(s.tau) << "\n"
     << "state_set = " << box(s.state_set) << "\n"
     << "initial_set = " << box(s.initial_set) << "\n"
     << "input_set = " << box(s.input_set) << "\n"
     << "output_set = " << box(s.output_set) << "\n"
     << "L_x = " << fmt_double(s.lipschitz.x) << "\n"
     << "L_u = " << fmt_double(s.lipschitz.u) << "\n"
     << "L_h = " << fmt_double(s.lipschitz.h) << "\n";
  for (const auto& [k, v] : s.params) os << "param." << k << " = " << fmt_double(v) << "\n";
  return os.str();
}

}  // namespace nsr
