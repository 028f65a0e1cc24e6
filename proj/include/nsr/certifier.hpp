#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsr/cover.hpp"
#include "nsr/mlp.hpp"
#include "nsr/system.hpp"
#include "nsr/train_config.hpp"

namespace nsr {

/// Outcome of one certificate condition. Grid conditions (7)-(10) carry a
/// margin (>= 0 means satisfied, except (9) which needs > 0) and up to
/// kMaxCounterexamples witnesses; validity conditions (11)-(13) carry lhs/rhs.
struct ConditionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::vector<Vec> counterexamples;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string note;
};

inline constexpr std::size_t kMaxCounterexamples = 100;

/// (7) every initial source center has an admissible initial target center
/// with V >= 0.5 + eta. Admissible witnesses are the dataset's init
/// candidates (output within eps - L_h_hat*e/2 of the source output).
/// margin = min over x_hat0 of (max over x0 of V) - (0.5 + eta).
ConditionResult check_init(const JointDataset& ds, const Mlp& V, const TrainConfig& cfg);

/// (8) positive pairs need V >= 0.5 + eta; (9) negative pairs need V < 0.5 - eta.
std::pair<ConditionResult, ConditionResult> check_classification(const JointDataset& ds,
                                                                 const DatasetLabels& labels,
                                                                 const Mlp& V,
                                                                 const TrainConfig& cfg);

/// (10) for every pair with V >= 0.5 + eta and every u_hat in U_d the
/// successor pair (f(x, K(x, x_hat, u_hat)), f_hat(x_hat, u_hat)) satisfies
/// the configured step inequality. Counterexamples are (x, x_hat, u_hat).
ConditionResult check_step(const JointDataset& ds, const Mlp& V, const Mlp& K,
                           const SystemDef& target, const SystemDef& source,
                           const TrainConfig& cfg);

struct ValidityResult {
  ConditionResult c11;
  ConditionResult c12;
  ConditionResult c13;
  // (12) with K's perturbation taken as max(e/2, e_hat/2) instead of e/2.
  double lhs12_with_input_perturbation = 0.0;
};

/// Validity conditions, left-hand sides rounded upward:
///  (11) L_h (L_x e/2 + L_u L_K max(e/2, ê/2)) + L_ĥ (L_x̂ e/2 + L_û ê/2) <= gamma
///  (12) L_V (max(L_x, L_x̂) e/2 + max(L_u L_K e/2, L_û ê/2))          <= 2 eta
///  (13) L_V e/2                                                        <= eta
ValidityResult check_validity(const LipschitzConstants& target, const LipschitzConstants& source,
                              double L_V, double L_K, const TrainConfig& cfg);

struct PrecheckReport {
  double e_max_11 = 0.0;  // largest e satisfying (11) with L_K = L_K_max
  double e_max_12 = 0.0;
  double e_max_13 = 0.0;
  double e_max = 0.0;     // min of the three
  double gamma_needed = 0.0;  // LHS(11) at e = min(e_max_12, e_max_13)
  bool feasible = false;
  std::string summary;
};

/// Inverts the validity conditions for caps L_V_max / L_K_max (advisory).
PrecheckReport precheck(const LipschitzConstants& target, const LipschitzConstants& source,
                        const TrainConfig& cfg, double L_V_max, double L_K_max);

struct CertReport {
  std::vector<ConditionResult> conditions;  // ids 7..13 in order
  double L_V = 0.0;
  double L_K = 0.0;
  double L_V_spectral = 0.0;
  double L_K_spectral = 0.0;
  double eps = 0.0, eta = 0.0, gamma = 0.0, e_state = 0.0, e_input = 0.0;
  StepMode mode = StepMode::relaxed;
  std::uint64_t td_size = 0;
  std::uint64_t inputs = 0;
  std::string config_hash;
  std::vector<std::string> notes;
  bool verdict = false;

  const ConditionResult& condition(int id) const;
  std::vector<int> failing() const;
  /// pass iff every condition passes.
  bool recompute_verdict() const { return failing().empty() && !conditions.empty(); }
  std::uint64_t total_violations() const;

  /// Stable "key = value" text (fixed key order).
  std::string to_text() const;
  static CertReport from_text(const std::string& text);
};

CertReport full_certificate(const JointDataset& ds, const DatasetLabels& labels, const Mlp& V,
                            const Mlp& K, const SystemDef& target, const SystemDef& source,
                            const TrainConfig& cfg);

}  // namespace nsr
