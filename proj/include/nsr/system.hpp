#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nsr/types.hpp"

namespace nsr {

/// x+ = f(x, u), written into `out` (length n).
using StepFn = std::function<void(ConstSpan x, ConstSpan u, MutSpan out)>;
/// y = h(x), written into `out` (length l).
using OutputFn = std::function<void(ConstSpan x, MutSpan out)>;

/// Infinity-norm Lipschitz constants of a system:
///   |f(x,u) - f(x',u')| <= x |x - x'| + u |u - u'|,  |h(x) - h(x')| <= h |x - x'|.
struct LipschitzConstants {
  double x = 0.0;
  double u = 0.0;
  double h = 0.0;
};

/// A black-box discrete-time control system. Evaluators are pure and may be
/// called concurrently.
struct SystemDef {
  std::string name;
  std::size_t n = 0;  // state dimension
  std::size_t m = 0;  // input dimension
  std::size_t l = 0;  // output dimension
  Box state_set;
  Box initial_set;
  Box input_set;
  Box output_set;
  StepFn step_fn;
  OutputFn output_fn;
  LipschitzConstants lipschitz;
  double tau = 0.0;  // sampling time, informational only
  // Non-empty iff h(x) = (x[c] for c in output_coords). Enables analytic
  // dataset counts; never required for correctness.
  std::vector<std::size_t> output_coords;
  std::string dynamics;  // registry key the evaluators came from
  std::map<std::string, double> params;

  Vec step(ConstSpan x, ConstSpan u) const;
  Vec output(ConstSpan x) const;
  /// Throws Error when dimensions or sets are inconsistent (X0 outside X, ...).
  void validate() const;
};

/// Names accepted by builtin_system().
const std::vector<std::string>& builtin_system_names();

/// The benchmark systems with their published constants:
/// vehicle5d / vehicle3d (tau = 0.1) and double_pendulum / pendulum (tau = 0.01).
SystemDef builtin_system(const std::string& name);

/// Dynamics registry used by config-defined systems. Contains every builtin
/// name plus `scalar_linear` (x+ = a x + b u, y = x; params a, b).
const std::vector<std::string>& dynamics_names();

/// Builds a system from registry dynamics. Boxes default to the builtin ones
/// when the key is a builtin name; `params` overrides model parameters.
SystemDef system_from_dynamics(const std::string& dynamics,
                               const std::map<std::string, double>& params = {});

/// Source-side policy: (x_hat, t) -> u_hat, always clamped into the input box.
struct ControllerDef {
  std::string name;
  Box input_set;
  std::function<void(ConstSpan xh, std::uint64_t t, MutSpan u)> policy;

  Vec operator()(ConstSpan xh, std::uint64_t t) const;
};

/// `spec` is one of: zero, pendulum_stabilizer, vehicle_waypoint,
/// vehicle_waypoint(gx,gy), random(seed). Û and the state layout come from
/// `source`.
ControllerDef builtin_controller(const std::string& spec, const SystemDef& source);

struct LipschitzCheckReport {
  std::size_t pairs = 0;
  std::size_t skipped_f = 0;  // pairs with zero input-space distance
  std::size_t skipped_h = 0;
  double max_ratio_f = 0.0;  // max |f - f'| / (L_x|dx| + L_u|du|)
  double max_ratio_h = 0.0;  // max |h - h'| / (L_h|dx|)
  std::size_t violations_f = 0;
  std::size_t violations_h = 0;
  std::size_t violations() const { return violations_f + violations_h; }
};

/// Monte-Carlo sanity check of the declared Lipschitz constants over uniform
/// samples of X x U. A ratio above 1 (beyond 1e-12 relative round-off) is a
/// violation.
LipschitzCheckReport sample_lipschitz_check(const SystemDef& sys, std::size_t pairs,
                                            std::uint64_t seed);

/// Human-readable description (dims, boxes, tau, constants).
std::string describe(const SystemDef& sys);

}  // namespace nsr
