#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nsr/cover.hpp"

namespace nsr {

/// How the one-step condition on V is certified.
///  strict:  V(successor) >= V(x, x_hat) + eta (literal; infeasible once V > 1 - eta)
///  relaxed: V(successor) >= 0.5 + 2 eta (the inequality the soundness proof uses)
enum class StepMode { strict, relaxed };

const char* step_mode_name(StepMode m);
StepMode parse_step_mode(const std::string& s);

/// Per-sample discrepancy used by the interface loss.
///  mean_abs: (1/l) sum_i |h_i - h_hat_i|  (the published "MSE" formula as written)
///  squared:  (1/l) sum_i (h_i - h_hat_i)^2
enum class KLoss { mean_abs, squared };

struct TrainConfig {
  double eps = 0.05;     // output closeness
  double eta = 0.1;      // robustness margin on V
  double gamma = 0.02;   // output-error margin
  double e_state = 0.015;
  double e_input = 0.25;
  std::uint64_t phase_len = 500;  // N: iterations per network before alternating
  std::uint64_t max_iters = 5000;
  double lr_v = 1e-3;
  double lr_k = 1e-3;
  std::size_t batch_size = 1024;  // 0 = full dataset per step
  std::uint64_t seed = 0;
  StepMode mode = StepMode::relaxed;
  KLoss k_loss = KLoss::mean_abs;
  double fd_delta = 1e-4;  // central-difference step on the target input
  std::vector<std::size_t> v_hidden{20, 20, 20, 20, 20};
  std::vector<std::size_t> k_hidden{200, 200, 200, 200, 200};
  bool k_passthrough = true;  // initialize K near u = u_hat
  // Cross-entropy terms stop once V clears its threshold by this much (0 = plain CE).
  double ce_margin = 0.05;
  // Weight of the log-Lipschitz penalty applied while L_V / L_K exceed the
  // caps implied by the validity conditions (0 disables it).
  double lipschitz_weight = 0.1;
  int max_restarts = 5;
  std::string config_hash;  // stamped into the networks and the report

  JointParams joint() const { return {eps, e_state, e_input}; }
  /// Throws Error unless eta > 0, gamma > 0, eps >= gamma, e_state > 0,
  /// e_input > 0, phase_len >= 1.
  void validate() const;
};

/// Source successors f_hat(x_hat, u_hat) and their outputs, for every source
/// grid index used by T_d and every u_hat in U_d. Independent of K.
struct SourceSuccessors {
  std::size_t n_hat = 0;
  std::size_t l = 0;
  std::size_t inputs = 0;
  std::vector<std::int64_t> slot_of;  // source grid index -> slot, -1 if unused
  std::vector<double> next;           // [slot][a][n_hat]
  std::vector<double> next_out;       // [slot][a][l]

  const double* state(std::uint64_t source_index, std::size_t a) const {
    return next.data() + (static_cast<std::size_t>(slot_of[source_index]) * inputs + a) * n_hat;
  }
  const double* output(std::uint64_t source_index, std::size_t a) const {
    return next_out.data() + (static_cast<std::size_t>(slot_of[source_index]) * inputs + a) * l;
  }
};

/// Labels of T_d pairs for a given interface K.
///   positive (+1): max over u_hat in U_d of the next-output error < eps - gamma
///   negative (-1): otherwise
/// 0 (undecided) never survives a full labeling; it is reserved for partial relabels.
struct DatasetLabels {
  std::vector<std::int8_t> cls;
  std::vector<double> max_err;  // per pair
  std::size_t inputs = 0;
  std::shared_ptr<const SourceSuccessors> source;
  // Initial pairs violating the initial-coverage condition: (init_grid index, source_init_grid index).
  std::vector<PairIndex> x_nsi;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

}  // namespace nsr
