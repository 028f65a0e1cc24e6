#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nsr/cover.hpp"
#include "nsr/mlp.hpp"
#include "nsr/system.hpp"

namespace nsr {

/// u = K(x, x_hat, u_hat), written into `u` (length m of the target).
using Interface = std::function<void(ConstSpan x, ConstSpan xh, ConstSpan uh, MutSpan u)>;

Interface mlp_interface(const Mlp& K);
/// u = 0 clamped into U.
Interface zero_interface(const Box& input_set);
/// u = u_hat on the shared leading components, 0 elsewhere, clamped into U.
Interface passthrough_interface(const Box& input_set);

struct TraceStep {
  std::uint64_t t = 0;
  Vec xh, uh, x, u, yh, y;  // inputs are NaN at the final step
  double err = 0.0;
};

struct Trace {
  std::uint64_t horizon = 0;
  std::vector<TraceStep> steps;  // t = 0..horizon unless truncated
  double max_err = 0.0;
  bool target_excursion = false;  // x left X at some step
  bool source_excursion = false;  // x_hat left X_hat
  std::int64_t first_excursion = -1;
  bool truncated = false;
  std::string diagnostic;

  /// Header `t, xhat..., uhat..., x..., u..., yhat..., y..., err`.
  std::string to_csv() const;
};

struct Match {
  std::uint64_t index = 0;  // into ds.init_grid
  Vec x0;
  double value = 0.0;  // V(x0, x_hat0)
};

/// argmax of V(x0, x_hat0) over the initial target centers whose output is
/// within eps of h_hat(x_hat0); ties go to the first in enumeration order.
/// Throws Error with the best value when it is below 0.5 or when no center
/// is output-close.
Match match_initial(ConstSpan xh0, const JointDataset& ds, const Mlp& V, const SystemDef& target,
                    const SystemDef& source);

/// Closed loop for t = 0..T-1: u_hat = controller(x_hat, t), u = K(x, x_hat, u_hat),
/// both systems step; outputs and errors are recorded through step T. A
/// non-finite state truncates the trace with a diagnostic.
Trace run_transfer(const SystemDef& target, const SystemDef& source,
                   const ControllerDef& controller, const Interface& K, ConstSpan xh0,
                   ConstSpan x0, std::uint64_t T);

struct SoundnessReport {
  std::uint64_t trials = 0;
  std::uint64_t completed = 0;
  std::uint64_t match_failures = 0;
  std::uint64_t violations = 0;  // completed trials with max_err > eps
  std::uint64_t truncated = 0;
  double max_err = 0.0;
  std::int64_t worst_trial = -1;
  std::string first_match_failure;

  std::string to_text() const;
};

/// Each trial draws x_hat0 uniformly from X_hat0 and a random(seed) source
/// controller from a per-trial seed, matches x0 and runs the closed loop.
SoundnessReport monte_carlo_soundness(const SystemDef& target, const SystemDef& source,
                                      const Interface& K, const Mlp& V, const JointDataset& ds,
                                      std::uint64_t trials, std::uint64_t T, double eps,
                                      std::uint64_t seed);

}  // namespace nsr
