#include "nsr/cover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nsr/parallel.hpp"

namespace nsr {
namespace {

// ceil(w / e), tolerant to the representation error of e (5 / 0.002 must give
// 2500, not 2501).
std::uint64_t cells_along(double width, double e) {
  if (width <= 0.0) return 1;
  const long double q = static_cast<long double>(width) / e;
  const long double c = std::ceil(q - q * 1e-9L);
  return c < 1 ? 1 : static_cast<std::uint64_t>(c);
}

long double count_cells(const Box& box, double e) {
  long double total = 1;
  for (std::size_t d = 0; d < box.dim(); ++d) {
    total *= static_cast<long double>(cells_along(box.ub[d] - box.lb[d], e));
  }
  return total;
}

void check_e(double e, const char* what) {
  if (!(e > 0.0) || !std::isfinite(e)) {
    throw Error(std::string(what) + ": discretization parameter must be > 0, got " +
                fmt_double(e));
  }
}

}  // namespace

double GridCover::center_coord(std::size_t d, std::uint64_t k) const {
  const std::uint64_t c = counts[d];
  if (k + 1 == c) {
    const double lo = box.lb[d] + static_cast<double>(k) * e;
    return 0.5 * (std::min(lo, box.ub[d]) + box.ub[d]);
  }
  return box.lb[d] + (static_cast<double>(k) + 0.5) * e;
}

void GridCover::center_into(std::uint64_t index, MutSpan out) const {
  for (std::size_t d = dim(); d-- > 0;) {
    const std::uint64_t k = index % counts[d];
    index /= counts[d];
    out[d] = center_coord(d, k);
  }
}

Vec GridCover::center(std::uint64_t index) const {
  if (index >= size) {
    throw Error("center index " + std::to_string(index) + " out of range (M = " +
                std::to_string(size) + ")");
  }
  Vec out(dim());
  center_into(index, out);
  return out;
}

Vec GridCover::axis(std::size_t d) const {
  Vec a(counts[d]);
  for (std::uint64_t k = 0; k < counts[d]; ++k) a[k] = center_coord(d, k);
  return a;
}

long double cover_count(const Box& box, double e) {
  check_e(e, "cover");
  return count_cells(box, e);
}

GridCover cover(const Box& box, double e) {
  check_e(e, "cover");
  GridCover gc;
  gc.box = box;
  gc.e = e;
  const long double total = count_cells(box, e);
  if (total > static_cast<long double>(std::numeric_limits<std::uint64_t>::max())) {
    std::ostringstream os;
    os << "cover: M = " << static_cast<double>(total) << " cells overflows the 64-bit count";
    throw Error(os.str());
  }
  gc.counts.resize(box.dim());
  for (std::size_t d = 0; d < box.dim(); ++d) gc.counts[d] = cells_along(box.ub[d] - box.lb[d], e);
  gc.size = static_cast<std::uint64_t>(total);
  return gc;
}

std::pair<std::uint64_t, Vec> nearest_center(const GridCover& gc, ConstSpan t) {
  if (t.size() != gc.dim()) {
    throw Error("nearest_center: point has " + std::to_string(t.size()) +
                " coordinates, cover has " + std::to_string(gc.dim()));
  }
  std::uint64_t index = 0;
  Vec c(gc.dim());
  for (std::size_t d = 0; d < gc.dim(); ++d) {
    if (!(t[d] >= gc.box.lb[d] && t[d] <= gc.box.ub[d])) {
      throw Error("nearest_center: dimension " + std::to_string(d) + " value " +
                  fmt_double(t[d]) + " outside [" + fmt_double(gc.box.lb[d]) + ", " +
                  fmt_double(gc.box.ub[d]) + "]");
    }
    const double q = std::floor((t[d] - gc.box.lb[d]) / gc.e);
    std::uint64_t k = q <= 0 ? 0 : static_cast<std::uint64_t>(q);
    k = std::min(k, gc.counts[d] - 1);
    index = index * gc.counts[d] + k;
    c[d] = gc.center_coord(d, k);
  }
  return {index, std::move(c)};
}

namespace {

void check_joint(const SystemDef& target, const SystemDef& source, const JointParams& p) {
  if (target.l != source.l) {
    throw Error("output dimensions differ: target l = " + std::to_string(target.l) +
                ", source l = " + std::to_string(source.l));
  }
  if (!(p.eps >= 0.0)) throw Error("eps must be >= 0, got " + fmt_double(p.eps));
  check_e(p.e_state, "e_state");
  check_e(p.e_input, "e_input");
}

std::vector<double> output_table(const SystemDef& sys, const GridCover& gc) {
  std::vector<double> table(gc.size * sys.l);
  for_each_shard(gc.size, [&](std::size_t, std::size_t b, std::size_t e) {
    Vec x(gc.dim());
    for (std::size_t i = b; i < e; ++i) {
      gc.center_into(i, x);
      sys.output_fn(x, MutSpan(table.data() + i * sys.l, sys.l));
    }
  });
  return table;
}

bool close_outputs(const double* a, const double* b, std::size_t l, double eps) {
  for (std::size_t k = 0; k < l; ++k) {
    if (!(std::abs(a[k] - b[k]) <= eps)) return false;
  }
  return true;
}

}  // namespace

void stream_joint_pairs(const SystemDef& target, const SystemDef& source, const JointParams& p,
                        const std::function<void(const PairIndex&)>& emit) {
  check_joint(target, source, p);
  const GridCover tg = cover(target.state_set, p.e_state);
  const GridCover sg = cover(source.state_set, p.e_state);
  const std::vector<double> source_out = output_table(source, sg);
  const std::size_t l = target.l;
  Vec x(tg.dim()), y(l);
  for (std::uint64_t i = 0; i < tg.size; ++i) {
    tg.center_into(i, x);
    target.output_fn(x, y);
    for (std::uint64_t j = 0; j < sg.size; ++j) {
      if (close_outputs(y.data(), source_out.data() + j * l, l, p.eps)) emit({i, j});
    }
  }
}

std::span<const std::uint64_t> JointDataset::candidates_for(std::uint64_t source_init_index) const {
  const auto b = init_offsets.at(source_init_index);
  const auto e = init_offsets.at(source_init_index + 1);
  return {init_candidates.data() + b, static_cast<std::size_t>(e - b)};
}

JointDataset build_joint_dataset(const SystemDef& target, const SystemDef& source,
                                 const JointParams& p) {
  check_joint(target, source, p);
  JointDataset ds;
  ds.params = p;
  ds.target_grid = cover(target.state_set, p.e_state);
  ds.source_grid = cover(source.state_set, p.e_state);
  ds.input_grid = cover(source.input_set, p.e_input);
  ds.init_grid = cover(target.initial_set, p.e_state);
  ds.source_init_grid = cover(source.initial_set, p.e_state);
  const long double prod =
      static_cast<long double>(ds.target_grid.size) * static_cast<long double>(ds.source_grid.size);
  ds.product_size = prod > static_cast<long double>(std::numeric_limits<std::uint64_t>::max())
                        ? std::numeric_limits<std::uint64_t>::max()
                        : static_cast<std::uint64_t>(prod);

  const std::size_t l = target.l;
  const std::vector<double> source_out = output_table(source, ds.source_grid);

  // Same row-major order as stream_joint_pairs; shards are concatenated in order.
  const auto& tg = ds.target_grid;
  const std::size_t shards = shard_count(tg.size);
  std::vector<std::vector<PairIndex>> parts(shards);
  for_each_shard(tg.size, [&](std::size_t s, std::size_t b, std::size_t e) {
    Vec x(tg.dim()), y(l);
    auto& out = parts[s];
    for (std::uint64_t i = b; i < e; ++i) {
      tg.center_into(i, x);
      target.output_fn(x, y);
      for (std::uint64_t j = 0; j < ds.source_grid.size; ++j) {
        if (close_outputs(y.data(), source_out.data() + j * l, l, p.eps)) out.push_back({i, j});
      }
    }
  });
  std::size_t total = 0;
  for (const auto& part : parts) total += part.size();
  ds.pairs.reserve(total);
  for (auto& part : parts) ds.pairs.insert(ds.pairs.end(), part.begin(), part.end());
  if (ds.pairs.empty()) {
    throw Error("empty T_d: eps = " + fmt_double(p.eps) +
                ": eps too small for these output maps (no grid pair passes the filter)");
  }

  ds.inputs.reserve(ds.input_grid.size);
  for (std::uint64_t a = 0; a < ds.input_grid.size; ++a) ds.inputs.push_back(ds.input_grid.center(a));

  ds.init_output_margin = p.eps - source.lipschitz.h * p.e_state / 2.0;
  const std::vector<double> init_out = output_table(target, ds.init_grid);
  const auto& sig = ds.source_init_grid;
  ds.init_offsets.assign(1, 0);
  ds.init_offsets.reserve(sig.size + 1);
  Vec xh(sig.dim()), yh(l);
  for (std::uint64_t j = 0; j < sig.size; ++j) {
    sig.center_into(j, xh);
    source.output_fn(xh, yh);
    if (ds.init_output_margin >= 0.0) {
      for (std::uint64_t i = 0; i < ds.init_grid.size; ++i) {
        if (close_outputs(init_out.data() + i * l, yh.data(), l, ds.init_output_margin)) {
          ds.init_candidates.push_back(i);
        }
      }
    }
    ds.init_offsets.push_back(ds.init_candidates.size());
  }
  return ds;
}

JointCount analytic_joint_count(const SystemDef& target, const SystemDef& source,
                                const JointParams& p) {
  check_joint(target, source, p);
  if (target.output_coords.size() != target.l || source.output_coords.size() != source.l) {
    throw Error("analytic_joint_count needs coordinate-projection outputs on both systems");
  }
  JointCount jc;
  jc.unfiltered = count_cells(target.state_set, p.e_state) * count_cells(source.state_set, p.e_state);

  // Build 1-D axes without materializing the full grids.
  auto axis = [&](const Box& box, std::size_t d) {
    const std::uint64_t c = cells_along(box.ub[d] - box.lb[d], p.e_state);
    GridCover g;
    g.box = Box({box.lb[d]}, {box.ub[d]});
    g.e = p.e_state;
    g.counts = {c};
    g.size = c;
    return g.axis(0);
  };

  long double filtered = 1;
  std::vector<bool> t_used(target.n, false), s_used(source.n, false);
  for (std::size_t k = 0; k < target.l; ++k) {
    const std::size_t ct = target.output_coords[k], cs = source.output_coords[k];
    if (t_used[ct] || s_used[cs]) throw Error("analytic_joint_count: repeated output coordinate");
    t_used[ct] = s_used[cs] = true;
    const Vec ta = axis(target.state_set, ct), sa = axis(source.state_set, cs);
    // Two-pointer window count of |ta_i - sa_j| <= eps (axes are sorted).
    long double pairs = 0;
    std::size_t lo = 0, hi = 0;
    for (double t : ta) {
      while (lo < sa.size() && !(std::abs(t - sa[lo]) <= p.eps) && sa[lo] < t) ++lo;
      if (hi < lo) hi = lo;
      while (hi < sa.size() && std::abs(t - sa[hi]) <= p.eps) ++hi;
      pairs += static_cast<long double>(hi - lo);
    }
    filtered *= pairs;
  }
  for (std::size_t d = 0; d < target.n; ++d) {
    if (!t_used[d]) filtered *= cells_along(target.state_set.ub[d] - target.state_set.lb[d], p.e_state);
  }
  for (std::size_t d = 0; d < source.n; ++d) {
    if (!s_used[d]) filtered *= cells_along(source.state_set.ub[d] - source.state_set.lb[d], p.e_state);
  }
  jc.filtered = filtered;
  return jc;
}

}  // namespace nsr
