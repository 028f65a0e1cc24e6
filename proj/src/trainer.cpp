#include "nsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nsr/parallel.hpp"
#include "nsr/rng.hpp"

namespace nsr {
namespace {

constexpr double kProbFloor = 1e-7;

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

// d ce(p, y) / dp at the clamped p.
double cross_entropy_grad(double p, double y) {
  const double q = clamp_prob(p);
  return -y / q + (1.0 - y) / (1.0 - q);
}

void check_interface_dims(const JointDataset& ds, const Mlp& K) {
  const std::size_t want = ds.target_grid.dim() + ds.source_grid.dim() + ds.input_grid.dim();
  if (K.input_dim() != want) {
    throw Error("interface network expects input length " + std::to_string(K.input_dim()) +
                ", dataset needs " + std::to_string(want));
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Per-shard gradient accumulators for several loss terms, merged in shard order.
struct TermGrads {
  std::vector<Gradients> g;
  std::vector<double> sum;
  std::vector<std::uint64_t> count;

  TermGrads(const Mlp& net, std::size_t terms)
      : g(terms, Gradients::zeros_like(net)), sum(terms, 0.0), count(terms, 0) {}
};

struct ReducedTerms {
  std::vector<double> sum;
  std::vector<std::uint64_t> count;
  Gradients grads;
};

template <class Fn>
ReducedTerms reduce_terms(const Mlp& net, std::size_t terms, std::size_t n, Fn&& body) {
  const std::size_t shards = shard_count(n);
  std::vector<TermGrads> parts;
  parts.reserve(shards);
  for (std::size_t s = 0; s < shards; ++s) parts.emplace_back(net, terms);
  for_each_shard(n, [&](std::size_t s, std::size_t b, std::size_t e) { body(parts[s], b, e); });

  ReducedTerms out{std::vector<double>(terms, 0.0), std::vector<std::uint64_t>(terms, 0),
                   Gradients::zeros_like(net)};
  std::vector<Gradients> per_term(terms, Gradients::zeros_like(net));
  for (auto& p : parts) {
    for (std::size_t t = 0; t < terms; ++t) {
      out.sum[t] += p.sum[t];
      out.count[t] += p.count[t];
      per_term[t].add(p.g[t]);
    }
  }
  for (std::size_t t = 0; t < terms; ++t) {
    if (out.count[t] == 0) continue;
    per_term[t].scale(1.0 / static_cast<double>(out.count[t]));
    out.grads.add(per_term[t]);
  }
  return out;
}

}  // namespace

bool LossBreakdown::finite() const {
  return std::isfinite(l1) && std::isfinite(l2) && std::isfinite(l3) && std::isfinite(l4) &&
         std::isfinite(lk);
}

double cross_entropy(double p, double y) {
  const double q = clamp_prob(p);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

std::shared_ptr<const SourceSuccessors> source_successors(const JointDataset& ds,
                                                          const SystemDef& source) {
  auto out = std::make_shared<SourceSuccessors>();
  out->n_hat = source.n;
  out->l = source.l;
  out->inputs = ds.inputs.size();
  out->slot_of.assign(ds.source_grid.size, -1);
  for (const auto& p : ds.pairs) out->slot_of[p.source] = 0;
  std::vector<std::uint64_t> used;
  for (std::uint64_t j = 0; j < ds.source_grid.size; ++j) {
    if (out->slot_of[j] >= 0) {
      out->slot_of[j] = static_cast<std::int64_t>(used.size());
      used.push_back(j);
    }
  }
  const std::size_t A = out->inputs, nh = source.n, l = source.l;
  out->next.assign(used.size() * A * nh, 0.0);
  out->next_out.assign(used.size() * A * l, 0.0);
  for_each_shard(used.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    Vec xh(nh);
    for (std::size_t s = b; s < e; ++s) {
      ds.source_grid.center_into(used[s], xh);
      for (std::size_t a = 0; a < A; ++a) {
        MutSpan nx(out->next.data() + (s * A + a) * nh, nh);
        source.step_fn(xh, ds.inputs[a], nx);
        source.output_fn(nx, MutSpan(out->next_out.data() + (s * A + a) * l, l));
      }
    }
  });
  return out;
}

DatasetLabels label_dataset(const JointDataset& ds, const SystemDef& target,
                            const SystemDef& source, const Mlp& K, const TrainConfig& cfg,
                            const DatasetLabels* previous) {
  const double bound = cfg.eps - cfg.gamma;
  if (!(bound > 0)) throw Error("label_dataset: eps - gamma must be > 0");
  check_interface_dims(ds, K);
  if (target.l != source.l) throw Error("label_dataset: output dimensions differ");

  DatasetLabels lab;
  lab.inputs = ds.inputs.size();
  lab.source = previous && previous->source ? previous->source : source_successors(ds, source);
  lab.cls.assign(ds.size(), 0);
  lab.max_err.assign(ds.size(), 0.0);

  const std::size_t n = target.n, nh = source.n, mh = ds.input_grid.dim(), l = target.l;
  const SourceSuccessors& succ = *lab.source;
  for_each_shard(ds.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    Vec kin(n + nh + mh), xn(n), y(l);
    for (std::size_t k = b; k < e; ++k) {
      const PairIndex& p = ds.pairs[k];
      ds.target_grid.center_into(p.target, MutSpan(kin.data(), n));
      ds.source_grid.center_into(p.source, MutSpan(kin.data() + n, nh));
      double worst = 0.0;
      for (std::size_t a = 0; a < ds.inputs.size(); ++a) {
        std::copy(ds.inputs[a].begin(), ds.inputs[a].end(), kin.begin() + n + nh);
        const Vec u = forward(K, kin);
        target.step_fn(ConstSpan(kin.data(), n), u, xn);
        target.output_fn(xn, y);
        const double err = inf_dist(y, ConstSpan(succ.output(p.source, a), l));
        worst = std::isnan(err) ? err : std::max(worst, err);
      }
      lab.max_err[k] = worst;
      lab.cls[k] = worst < bound ? 1 : -1;
    }
  });
  for (auto c : lab.cls) (c > 0 ? lab.positives : lab.negatives)++;
  if (previous) lab.x_nsi = previous->x_nsi;
  return lab;
}

std::vector<PairIndex> violating_initial_pairs(const JointDataset& ds, const Mlp& V,
                                               double threshold) {
  const std::size_t n = ds.init_grid.dim(), nh = ds.source_init_grid.dim();
  const std::size_t count = ds.source_init_grid.size;
  std::vector<std::vector<PairIndex>> parts(shard_count(count));
  for_each_shard(count, [&](std::size_t s, std::size_t b, std::size_t e) {
    Vec in(n + nh), s1, s2;
    for (std::size_t j = b; j < e; ++j) {
      auto cands = ds.candidates_for(j);
      if (cands.empty()) continue;
      ds.source_init_grid.center_into(j, MutSpan(in.data() + n, nh));
      double best = -INFINITY;
      std::uint64_t arg = cands.front();
      for (auto i : cands) {
        ds.init_grid.center_into(i, MutSpan(in.data(), n));
        const double v = forward_scalar(V, in, s1, s2);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      if (best < threshold) parts[s].push_back({arg, j});
    }
  });
  std::vector<PairIndex> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

LossResult loss_V(const JointDataset& ds, const DatasetLabels& labels, const Mlp& V, const Mlp& K,
                  const SystemDef& target, const SystemDef& source, const TrainConfig& cfg,
                  std::span<const std::size_t> batch) {
  check_interface_dims(ds, K);
  if (labels.cls.size() != ds.size() || !labels.source) {
    throw Error("loss_V: labels do not match the dataset");
  }
  std::vector<std::size_t> every;
  if (batch.empty()) {
    every = all_indices(ds.size());
    batch = every;
  }
  const double hi = 0.5 + cfg.eta, lo = 0.5 - cfg.eta, m = cfg.ce_margin;
  const bool gated = m > 0;
  const std::size_t n = target.n, nh = source.n, mh = ds.input_grid.dim();
  const SourceSuccessors& succ = *labels.source;

  // Terms: 0 = l2 (positive), 1 = l3 (successor), 2 = l4 (negative).
  ReducedTerms pairs = reduce_terms(V, 3, batch.size(), [&](TermGrads& acc, std::size_t b,
                                                            std::size_t e) {
    Vec vin(n + nh), kin(n + nh + mh), xn(n), s1, s2;
    ForwardCache cache;
    for (std::size_t q = b; q < e; ++q) {
      const std::size_t k = batch[q];
      const PairIndex& p = ds.pairs[k];
      ds.target_grid.center_into(p.target, MutSpan(vin.data(), n));
      ds.source_grid.center_into(p.source, MutSpan(vin.data() + n, nh));
      const double v = forward(V, vin, cache)[0];
      if (labels.cls[k] > 0) {
        if (!gated || v < hi + m) {
          acc.sum[0] += cross_entropy(v, 1.0);
          ++acc.count[0];
          const double up = cross_entropy_grad(v, 1.0);
          backward(V, cache, ConstSpan(&up, 1), acc.g[0]);
        }
      } else if (labels.cls[k] < 0) {
        if (!gated || v >= lo - m) {
          acc.sum[2] += cross_entropy(v, 0.0);
          ++acc.count[2];
          const double up = cross_entropy_grad(v, 0.0);
          backward(V, cache, ConstSpan(&up, 1), acc.g[2]);
        }
      }
      if (!(v >= hi)) continue;
      const double need = cfg.mode == StepMode::strict ? v + cfg.eta : 0.5 + 2.0 * cfg.eta;
      std::copy(vin.begin(), vin.end(), kin.begin());
      for (std::size_t a = 0; a < ds.inputs.size(); ++a) {
        std::copy(ds.inputs[a].begin(), ds.inputs[a].end(), kin.begin() + n + nh);
        const Vec u = forward(K, kin);
        target.step_fn(ConstSpan(kin.data(), n), u, xn);
        Vec sin(n + nh);
        std::copy(xn.begin(), xn.end(), sin.begin());
        const double* xhn = succ.state(p.source, a);
        std::copy(xhn, xhn + nh, sin.begin() + n);
        const double vn = forward(V, sin, cache)[0];
        if (gated && vn >= need + m) continue;
        acc.sum[1] += cross_entropy(vn, 1.0);
        ++acc.count[1];
        const double up = cross_entropy_grad(vn, 1.0);
        backward(V, cache, ConstSpan(&up, 1), acc.g[1]);
      }
    }
  });

  // l1 over the initial pairs currently violating the initial-coverage condition.
  const std::size_t ni = ds.init_grid.dim(), nhi = ds.source_init_grid.dim();
  ReducedTerms init = reduce_terms(V, 1, labels.x_nsi.size(), [&](TermGrads& acc, std::size_t b,
                                                                  std::size_t e) {
    Vec vin(ni + nhi);
    ForwardCache cache;
    for (std::size_t q = b; q < e; ++q) {
      const PairIndex& p = labels.x_nsi[q];
      ds.init_grid.center_into(p.target, MutSpan(vin.data(), ni));
      ds.source_init_grid.center_into(p.source, MutSpan(vin.data() + ni, nhi));
      const double v = forward(V, vin, cache)[0];
      if (gated && v >= hi + m) continue;
      acc.sum[0] += cross_entropy(v, 1.0);
      ++acc.count[0];
      const double up = cross_entropy_grad(v, 1.0);
      backward(V, cache, ConstSpan(&up, 1), acc.g[0]);
    }
  });

  LossResult r;
  r.loss.l1 = init.sum[0];
  r.loss.n1 = init.count[0];
  r.loss.l2 = pairs.sum[0];
  r.loss.n2 = pairs.count[0];
  r.loss.l3 = pairs.sum[1];
  r.loss.n3 = pairs.count[1];
  r.loss.l4 = pairs.sum[2];
  r.loss.n4 = pairs.count[2];
  r.grads = std::move(init.grads);
  r.grads.add(pairs.grads);
  return r;
}

LossResult loss_K(const JointDataset& ds, const DatasetLabels& labels, const Mlp& V, const Mlp& K,
                  const SystemDef& target, const TrainConfig& cfg,
                  std::span<const std::size_t> batch) {
  check_interface_dims(ds, K);
  if (!labels.source) throw Error("loss_K: labels carry no source successors");
  std::vector<std::size_t> every;
  if (batch.empty()) {
    every = all_indices(ds.size());
    batch = every;
  }
  const double gate = 0.5 + cfg.eta;
  const std::size_t n = target.n, nh = ds.source_grid.dim(), mh = ds.input_grid.dim();
  const std::size_t m = target.m, l = target.l;
  const double inv_l = 1.0 / static_cast<double>(l);
  const double delta = cfg.fd_delta;
  const SourceSuccessors& succ = *labels.source;

  ReducedTerms red = reduce_terms(K, 1, batch.size(), [&](TermGrads& acc, std::size_t b,
                                                          std::size_t e) {
    Vec kin(n + nh + mh), xn(n), y(l), yp(l), ym(l), up(m), dy(l), s1, s2;
    std::vector<Vec> jac(m, Vec(l));
    ForwardCache cache;
    for (std::size_t q = b; q < e; ++q) {
      const std::size_t k = batch[q];
      const PairIndex& p = ds.pairs[k];
      ds.target_grid.center_into(p.target, MutSpan(kin.data(), n));
      ds.source_grid.center_into(p.source, MutSpan(kin.data() + n, nh));
      if (!(forward_scalar(V, ConstSpan(kin.data(), n + nh), s1, s2) >= gate)) continue;
      const ConstSpan x(kin.data(), n);
      for (std::size_t a = 0; a < ds.inputs.size(); ++a) {
        std::copy(ds.inputs[a].begin(), ds.inputs[a].end(), kin.begin() + n + nh);
        Vec u = forward(K, kin, cache);
        target.step_fn(x, u, xn);
        target.output_fn(xn, y);
        const double* yh = succ.output(p.source, a);
        double loss = 0.0;
        for (std::size_t i = 0; i < l; ++i) {
          const double d = y[i] - yh[i];
          if (cfg.k_loss == KLoss::squared) {
            loss += d * d * inv_l;
            dy[i] = 2.0 * d * inv_l;
          } else {
            loss += std::abs(d) * inv_l;
            dy[i] = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * inv_l;
          }
        }
        acc.sum[0] += loss;
        ++acc.count[0];
        for (std::size_t j = 0; j < m; ++j) {
          const double uj = u[j];
          u[j] = uj + delta;
          target.step_fn(x, u, xn);
          target.output_fn(xn, yp);
          u[j] = uj - delta;
          target.step_fn(x, u, xn);
          target.output_fn(xn, ym);
          u[j] = uj;
          double g = 0.0;
          for (std::size_t i = 0; i < l; ++i) g += dy[i] * (yp[i] - ym[i]) / (2.0 * delta);
          up[j] = g;
        }
        backward(K, cache, up, acc.g[0]);
      }
    }
  });
  LossResult r;
  r.loss.lk = red.sum[0];
  r.loss.nk = red.count[0];
  r.grads = std::move(red.grads);
  return r;
}

LipschitzCaps lipschitz_caps(const SystemDef& target, const SystemDef& source,
                             const TrainConfig& cfg, double L_K) {
  const LipschitzConstants& t = target.lipschitz;
  const LipschitzConstants& s = source.lipschitz;
  const double e2 = cfg.e_state / 2.0, eh2 = cfg.e_input / 2.0;
  LipschitzCaps c;
  const double d13 = e2;
  const double d12 = std::max(t.x, s.x) * e2 + std::max(t.u * L_K * e2, s.u * eh2);
  c.v = std::min(d13 > 0 ? cfg.eta / d13 : INFINITY, d12 > 0 ? 2.0 * cfg.eta / d12 : INFINITY);
  const double rest = cfg.gamma - t.h * t.x * e2 - s.h * (s.x * e2 + s.u * eh2);
  const double per_k = t.h * t.u * std::max(e2, eh2);
  c.k = per_k > 0 ? std::max(0.0, rest / per_k) : INFINITY;
  return c;
}

namespace {

bool better(const CertReport& a, const CertReport& b) {
  if (a.verdict != b.verdict) return a.verdict;
  return a.total_violations() < b.total_violations();
}

PhaseRecord phase_record(std::uint64_t iter, char phase, const CertReport& rep,
                         const DatasetLabels& labels) {
  PhaseRecord r;
  r.iter = iter;
  r.phase = phase;
  r.L_V = rep.L_V;
  r.L_K = rep.L_K;
  r.positives = labels.positives;
  r.negatives = labels.negatives;
  for (const auto& c : rep.conditions) r.violations.push_back(c.violations);
  r.verdict = rep.verdict;
  return r;
}

// Seeded minibatches: uniform without replacement within each epoch.
class Batcher {
 public:
  Batcher(std::size_t n, std::size_t batch, std::uint64_t seed)
      : rng_(seed), order_(all_indices(n)), batch_(batch == 0 || batch >= n ? n : batch),
        cursor_(order_.size()) {}

  std::span<const std::size_t> next() {
    if (batch_ == order_.size()) return order_;
    if (cursor_ + batch_ > order_.size()) {
      for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.below(i)]);
      cursor_ = 0;
    }
    std::span<const std::size_t> s(order_.data() + cursor_, batch_);
    cursor_ += batch_;
    return s;
  }

 private:
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t cursor_;
};

}  // namespace

TrainResult algorithm1(const SystemDef& target, const SystemDef& source, const JointDataset& ds,
                       const TrainConfig& cfg, const TrainCallbacks& cb, std::optional<Mlp> V0,
                       std::optional<Mlp> K0) {
  cfg.validate();
  Mlp V = V0 ? *V0 : make_relation_net(target.n, source.n, cfg.v_hidden, cfg.seed);
  Mlp K = K0 ? *K0
             : make_interface_net(target.n, source.n, source.m, target.input_set, cfg.k_hidden,
                                  splitmix64(cfg.seed ^ 0x4b), cfg.k_passthrough);
  V.config_hash = cfg.config_hash;
  K.config_hash = cfg.config_hash;

  const double init_threshold = 0.5 + cfg.eta + cfg.ce_margin;
  DatasetLabels labels = label_dataset(ds, target, source, K, cfg);
  labels.x_nsi = violating_initial_pairs(ds, V, init_threshold);
  CertReport report = full_certificate(ds, labels, V, K, target, source, cfg);

  TrainResult best;
  best.V = V;
  best.K = K;
  best.report = report;
  best.labels = labels;
  best.success = report.verdict;
  PhaseRecord first = phase_record(0, '-', report, labels);
  best.phases.push_back(first);
  if (cb.on_phase) cb.on_phase(first, V, K);
  if (best.success) return best;

  TrainState sv = TrainState::for_net(V, cfg.lr_v, cfg.seed);
  TrainState sk = TrainState::for_net(K, cfg.lr_k, cfg.seed);
  Batcher batcher(ds.size(), cfg.batch_size, splitmix64(cfg.seed ^ 0xba7c));
  std::vector<IterationRecord> history;
  std::vector<PhaseRecord> phases = best.phases;

  std::uint64_t it = 0, phase_no = 0;
  int restarts = 0;
  bool gave_up = false;
  while (it < cfg.max_iters && !gave_up) {
    const char phase = phase_no % 2 == 0 ? 'K' : 'V';
    const std::uint64_t len = std::min<std::uint64_t>(cfg.phase_len, cfg.max_iters - it);
    const Mlp V_snap = V, K_snap = K;
    const TrainState sv_snap = sv, sk_snap = sk;
    const Batcher batch_snap = batcher;
    const std::size_t hist_snap = history.size();

    bool diverged = false;
    for (std::uint64_t j = 0; j < len && !diverged; ++j) {
      const auto batch = batcher.next();
      IterationRecord rec;
      rec.iter = it + j + 1;
      rec.phase = phase;
      try {
        if (phase == 'K') {
          LossResult lr = loss_K(ds, labels, V, K, target, cfg, batch);
          rec.loss = lr.loss;
          if (!lr.loss.finite()) throw NonFiniteGradient("non-finite interface loss");
          const double cap = lipschitz_caps(target, source, cfg, lipschitz_upper_bound(K)).k;
          // A zero cap means (11) fails for every K; shrinking K would only hurt the labels.
          const bool penalize = cfg.lipschitz_weight > 0 && cap > 0 && std::isfinite(cap) &&
                                lipschitz_upper_bound(K) > 0.9 * cap;
          if (penalize) add_log_lipschitz_gradient(K, cfg.lipschitz_weight, lr.grads);
          if (lr.loss.nk > 0 || penalize) optimizer_step(K, lr.grads, sk);
        } else {
          LossResult lr = loss_V(ds, labels, V, K, target, source, cfg, batch);
          rec.loss = lr.loss;
          if (!lr.loss.finite()) throw NonFiniteGradient("non-finite relation loss");
          const double cap = lipschitz_caps(target, source, cfg, lipschitz_upper_bound(K)).v;
          if (cfg.lipschitz_weight > 0 && lipschitz_upper_bound(V) > 0.9 * cap) {
            add_log_lipschitz_gradient(V, cfg.lipschitz_weight, lr.grads);
          }
          optimizer_step(V, lr.grads, sv);
        }
      } catch (const NonFiniteGradient&) {
        diverged = true;
        break;
      }
      rec.L_V = lipschitz_upper_bound(V);
      rec.L_K = lipschitz_upper_bound(K);
      if (!std::isfinite(rec.L_V) || !std::isfinite(rec.L_K)) {
        diverged = true;
        break;
      }
      history.push_back(rec);
      if (cb.on_iteration) cb.on_iteration(rec);
    }

    if (diverged) {
      V = V_snap;
      K = K_snap;
      sv = sv_snap;
      sk = sk_snap;
      batcher = batch_snap;
      history.resize(hist_snap);
      (phase == 'K' ? sk : sv).lr *= 0.5;
      ++restarts;
      PhaseRecord pr = phase_record(it, phase, report, labels);
      pr.event = restarts > cfg.max_restarts ? "diverged" : "restart";
      phases.push_back(pr);
      if (cb.on_phase) cb.on_phase(pr, V, K);
      if (restarts > cfg.max_restarts) gave_up = true;
      continue;
    }

    it += len;
    if (phase == 'K') labels = label_dataset(ds, target, source, K, cfg, &labels);
    labels.x_nsi = violating_initial_pairs(ds, V, init_threshold);
    report = full_certificate(ds, labels, V, K, target, source, cfg);
    PhaseRecord pr = phase_record(it, phase, report, labels);
    phases.push_back(pr);
    if (cb.on_phase) cb.on_phase(pr, V, K);
    if (better(report, best.report)) {
      best.V = V;
      best.K = K;
      best.report = report;
      best.labels = labels;
    }
    if (report.verdict) break;
    ++phase_no;
  }

  best.success = best.report.verdict;
  best.iterations = it;
  best.restarts = restarts;
  if (gave_up) best.report.notes.push_back("training diverged: restart budget exhausted");
  best.history = std::move(history);
  best.phases = std::move(phases);
  return best;
}

std::string format_record(const IterationRecord& r) {
  std::ostringstream os;
  os << "iter=" << r.iter << " phase=" << r.phase << " l1=" << fmt_double(r.loss.l1)
     << " l2=" << fmt_double(r.loss.l2) << " l3=" << fmt_double(r.loss.l3)
     << " l4=" << fmt_double(r.loss.l4) << " lk=" << fmt_double(r.loss.lk)
     << " n1=" << r.loss.n1 << " n2=" << r.loss.n2 << " n3=" << r.loss.n3 << " n4=" << r.loss.n4
     << " nk=" << r.loss.nk << " L_V=" << fmt_double(r.L_V) << " L_K=" << fmt_double(r.L_K);
  return os.str();
}

std::string format_record(const PhaseRecord& r) {
  std::ostringstream os;
  os << "phase_end iter=" << r.iter << " phase=" << r.phase << " L_V=" << fmt_double(r.L_V)
     << " L_K=" << fmt_double(r.L_K) << " positives=" << r.positives
     << " negatives=" << r.negatives << " violations=";
  for (std::size_t i = 0; i < r.violations.size(); ++i) {
    os << (i ? "," : "") << r.violations[i];
  }
  os << " verdict=" << (r.verdict ? "pass" : "fail");
  if (!r.event.empty()) os << " event=" << r.event;
  return os.str();
}

}  // namespace nsr
