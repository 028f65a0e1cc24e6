#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "nsr/system.hpp"
#include "nsr/types.hpp"

namespace nsr {

/// Finite cover of a box by disjoint hypercubes of edge e.
///
/// Dimension d is split into counts[d] = ceil((ub - lb) / e) cells of width e
/// starting at lb; the last cell is clipped at ub and its center is the
/// midpoint of the clipped cell, so |t - center| <= e/2 holds for every point
/// of the box. Zero-width dimensions get a single cell centered at lb.
/// Centers are enumerated in row-major order (last dimension fastest).
struct GridCover {
  Box box;
  double e = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t size = 0;  // M = prod counts

  std::size_t dim() const { return box.dim(); }
  double center_coord(std::size_t d, std::uint64_t k) const;
  void center_into(std::uint64_t index, MutSpan out) const;
  Vec center(std::uint64_t index) const;
  /// All centers along dimension d.
  Vec axis(std::size_t d) const;
};

/// Throws Error for e <= 0, or when M does not fit in 64 bits (message carries M).
GridCover cover(const Box& box, double e);

/// Number of cells the cover would have, without the overflow check.
long double cover_count(const Box& box, double e);

/// Index and center of the cube containing t. Points on the upper boundary
/// belong to the last cube. Throws Error naming the dimension if t is outside.
std::pair<std::uint64_t, Vec> nearest_center(const GridCover& gc, ConstSpan t);

/// One element of T_d: indices into the target and source state grids.
struct PairIndex {
  std::uint64_t target = 0;
  std::uint64_t source = 0;
  bool operator==(const PairIndex&) const = default;
};

struct JointParams {
  double eps = 0.0;      // output closeness
  double e_state = 0.0;  // state discretization
  double e_input = 0.0;  // source-input discretization
};

/// Streams the centers of cover(X, e) x cover(X_hat, e) in row-major order
/// (target index major) and emits the pairs with |h(x) - h_hat(x_hat)| <= eps.
/// Nothing proportional to |T_d| is held in memory.
void stream_joint_pairs(const SystemDef& target, const SystemDef& source, const JointParams& p,
                        const std::function<void(const PairIndex&)>& emit);

/// Dataset for training and certification.
///
/// T_d pairs, the source-input grid U_d, and the initial-state grids
/// (X0 under-approximated and X0_hat over-approximated; for boxes both are the
/// boxes themselves). For every initial source center the dataset also keeps
/// the initial target centers whose output is within eps - L_h_hat*e/2 of it:
/// these are the only admissible witnesses for initial-state matching.
struct JointDataset {
  JointParams params;
  GridCover target_grid;
  GridCover source_grid;
  GridCover input_grid;        // over U_hat, edge e_input
  GridCover init_grid;         // over X0 (under-approximation), edge e_state
  GridCover source_init_grid;  // over X0_hat (over-approximation), edge e_state
  std::vector<PairIndex> pairs;
  std::vector<Vec> inputs;  // materialized U_d centers
  std::vector<std::uint64_t> init_offsets;     // CSR over source_init_grid
  std::vector<std::uint64_t> init_candidates;  // indices into init_grid
  double init_output_margin = 0.0;             // eps - L_h_hat*e/2
  std::uint64_t product_size = 0;              // |cover(X)| * |cover(X_hat)|

  std::size_t size() const { return pairs.size(); }
  Vec target_state(std::size_t k) const { return target_grid.center(pairs[k].target); }
  Vec source_state(std::size_t k) const { return source_grid.center(pairs[k].source); }
  std::span<const std::uint64_t> candidates_for(std::uint64_t source_init_index) const;
};

/// Throws Error if output dimensions differ, eps < 0, or no pair passes the
/// output filter ("eps too small for these output maps").
JointDataset build_joint_dataset(const SystemDef& target, const SystemDef& source,
                                 const JointParams& p);

struct JointCount {
  long double unfiltered = 0;  // |cover(X)| * |cover(X_hat)|
  long double filtered = 0;    // |T_d|
};

/// Closed-form |T_d| for systems whose outputs are coordinate projections:
/// the inf-norm filter factorizes into per-output 1-D pair counts. No grid is
/// materialized, so this works at sizes far beyond 2^64.
JointCount analytic_joint_count(const SystemDef& target, const SystemDef& source,
                                const JointParams& p);

}  // namespace nsr
