#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nsr/certifier.hpp"
#include "nsr/cover.hpp"
#include "nsr/mlp.hpp"
#include "nsr/system.hpp"
#include "nsr/train_config.hpp"

namespace nsr {

/// f_hat(x_hat, u_hat) and h_hat of it for every source center used by T_d.
std::shared_ptr<const SourceSuccessors> source_successors(const JointDataset& ds,
                                                          const SystemDef& source);

/// Labels every T_d pair under K. Reuses `previous->source` when given (the
/// source side does not depend on K). Throws Error if eps - gamma <= 0 or K
/// has the wrong input dimension.
DatasetLabels label_dataset(const JointDataset& ds, const SystemDef& target,
                            const SystemDef& source, const Mlp& K, const TrainConfig& cfg,
                            const DatasetLabels* previous = nullptr);

/// For every initial source center whose best admissible V(x0, x_hat0) is below
/// `threshold`, the argmax pair (first in enumeration order on ties).
std::vector<PairIndex> violating_initial_pairs(const JointDataset& ds, const Mlp& V,
                                               double threshold);

struct LossBreakdown {
  double l1 = 0, l2 = 0, l3 = 0, l4 = 0, lk = 0;
  std::uint64_t n1 = 0, n2 = 0, n3 = 0, n4 = 0, nk = 0;  // contributing samples
  double total_v() const { return l1 + l2 + l3 + l4; }
  bool finite() const;
};

struct LossResult {
  LossBreakdown loss;
  Gradients grads;
};

/// ce(p, y) = -[y log p + (1-y) log(1-p)], p clamped to [1e-7, 1-1e-7].
double cross_entropy(double p, double y);

/// Losses l1..l4 on V (K frozen). Terms are sums over their samples; each
/// term's gradient is divided by its sample count before the terms are added.
/// `batch` selects T_d indices (empty = all pairs); l1 always uses labels.x_nsi.
/// With cfg.ce_margin > 0 a sample stops contributing once V clears its
/// certificate threshold by that margin.
LossResult loss_V(const JointDataset& ds, const DatasetLabels& labels, const Mlp& V, const Mlp& K,
                  const SystemDef& target, const SystemDef& source, const TrainConfig& cfg,
                  std::span<const std::size_t> batch = {});

/// Interface loss over pairs with V >= 0.5 + eta and every u_hat in U_d.
/// d(target output)/du comes from central differences of h(f(x, .)).
LossResult loss_K(const JointDataset& ds, const DatasetLabels& labels, const Mlp& V, const Mlp& K,
                  const SystemDef& target, const TrainConfig& cfg,
                  std::span<const std::size_t> batch = {});

/// Largest L_V and L_K the validity conditions admit at this configuration
/// (L_V from (12) and (13) at the current L_K, L_K from (11)); inf when unconstrained.
struct LipschitzCaps {
  double v = 0.0;
  double k = 0.0;
};
LipschitzCaps lipschitz_caps(const SystemDef& target, const SystemDef& source,
                             const TrainConfig& cfg, double L_K);

struct IterationRecord {
  std::uint64_t iter = 0;
  char phase = 'K';  // 'K' or 'V'
  LossBreakdown loss;
  double L_V = 0.0;
  double L_K = 0.0;
};

struct PhaseRecord {
  std::uint64_t iter = 0;  // iterations completed
  char phase = '-';        // phase just finished, '-' for the initial check
  double L_V = 0.0;
  double L_K = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::vector<std::uint64_t> violations;  // conditions 7..13
  bool verdict = false;
  std::string event;  // "", "restart", ...
};

struct TrainCallbacks {
  std::function<void(const IterationRecord&)> on_iteration;
  // Called after every phase with the networks as they stand.
  std::function<void(const PhaseRecord&, const Mlp& V, const Mlp& K)> on_phase;
};

struct TrainResult {
  Mlp V;
  Mlp K;
  CertReport report;
  DatasetLabels labels;
  bool success = false;
  std::uint64_t iterations = 0;
  int restarts = 0;
  std::vector<IterationRecord> history;
  std::vector<PhaseRecord> phases;
};

/// Alternating training (K phase first, N iterations each). After every phase
/// the dataset is relabeled and fully certified; training stops at the first
/// passing certificate or after max_iters. On a non-finite loss or gradient the
/// phase restarts from its starting snapshot with that network's learning rate
/// halved, at most cfg.max_restarts times. Returns the best networks seen
/// (passing certificate first, then fewest violations).
TrainResult algorithm1(const SystemDef& target, const SystemDef& source, const JointDataset& ds,
                       const TrainConfig& cfg, const TrainCallbacks& callbacks = {},
                       std::optional<Mlp> V0 = std::nullopt, std::optional<Mlp> K0 = std::nullopt);

/// Text forms of the progress records ("key=value" fields, one line each).
std::string format_record(const IterationRecord& r);
std::string format_record(const PhaseRecord& r);

}  // namespace nsr
