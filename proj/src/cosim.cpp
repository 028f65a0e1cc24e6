#include "nsr/cosim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsr/parallel.hpp"
#include "nsr/rng.hpp"

namespace nsr {

Interface mlp_interface(const Mlp& K) {
  return [K](ConstSpan x, ConstSpan xh, ConstSpan uh, MutSpan u) {
    const Vec out = forward(K, concat({x, xh, uh}));
    if (out.size() != u.size()) throw Error("interface output has the wrong length");
    std::copy(out.begin(), out.end(), u.begin());
  };
}

Interface zero_interface(const Box& input_set) {
  return [input_set](ConstSpan, ConstSpan, ConstSpan, MutSpan u) {
    std::fill(u.begin(), u.end(), 0.0);
    input_set.clamp_in_place(u);
  };
}

Interface passthrough_interface(const Box& input_set) {
  return [input_set](ConstSpan, ConstSpan, ConstSpan uh, MutSpan u) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = i < uh.size() ? uh[i] : 0.0;
    input_set.clamp_in_place(u);
  };
}

std::string Trace::to_csv() const {
  std::ostringstream os;
  const TraceStep* first = steps.empty() ? nullptr : &steps.front();
  auto names = [&](const char* prefix, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) os << ',' << prefix << i;
  };
  os << 't';
  if (first) {
    names("xhat", first->xh.size());
    names("uhat", first->uh.size());
    names("x", first->x.size());
    names("u", first->u.size());
    names("yhat", first->yh.size());
    names("y", first->y.size());
  }
  os << ",err\n";
  for (const auto& s : steps) {
    os << s.t;
    for (const Vec* v : {&s.xh, &s.uh, &s.x, &s.u, &s.yh, &s.y}) {
      for (double d : *v) os << ',' << fmt_double(d);
    }
    os << ',' << fmt_double(s.err) << '\n';
  }
  return os.str();
}

Match match_initial(ConstSpan xh0, const JointDataset& ds, const Mlp& V, const SystemDef& target,
                    const SystemDef& source) {
  if (!source.initial_set.contains(xh0, 1e-12)) {
    throw Error("match_initial: x_hat0 = " + format_vec(xh0) + " is outside X_hat0");
  }
  const Vec yh = source.output(xh0);
  const std::size_t n = ds.init_grid.dim();
  Vec in(n + xh0.size()), s1, s2, y(target.l);
  std::copy(xh0.begin(), xh0.end(), in.begin() + n);
  Match best;
  best.value = -INFINITY;
  bool any = false;
  for (std::uint64_t i = 0; i < ds.init_grid.size; ++i) {
    MutSpan x(in.data(), n);
    ds.init_grid.center_into(i, x);
    target.output_fn(x, y);
    if (!(inf_dist(y, yh) <= ds.params.eps)) continue;
    any = true;
    const double v = forward_scalar(V, in, s1, s2);
    if (v > best.value) {
      best.value = v;
      best.index = i;
    }
  }
  if (!any) {
    throw Error("match_initial: no initial target center has output within eps of h_hat(x_hat0)");
  }
  if (!(best.value >= 0.5)) {
    throw Error("match_initial: best V(x0, x_hat0) = " + fmt_double(best.value) + " < 0.5");
  }
  best.x0 = ds.init_grid.center(best.index);
  return best;
}

namespace {

bool all_finite(ConstSpan v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

}  // namespace

Trace run_transfer(const SystemDef& target, const SystemDef& source,
                   const ControllerDef& controller, const Interface& K, ConstSpan xh0,
                   ConstSpan x0, std::uint64_t T) {
  if (T < 1) throw Error("run_transfer: horizon must be >= 1");
  if (xh0.size() != source.n) throw Error("run_transfer: x_hat0 has the wrong dimension");
  if (x0.size() != target.n) throw Error("run_transfer: x0 has the wrong dimension");

  Trace tr;
  tr.horizon = T;
  tr.steps.reserve(T + 1);
  Vec xh(xh0.begin(), xh0.end()), x(x0.begin(), x0.end());
  Vec xh_next(source.n), x_next(target.n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::uint64_t t = 0; t <= T; ++t) {
    if (!all_finite(x) || !all_finite(xh)) {
      tr.truncated = true;
      tr.diagnostic = "non-finite state at t=" + std::to_string(t);
      break;
    }
    TraceStep s;
    s.t = t;
    s.xh = xh;
    s.x = x;
    s.yh = source.output(xh);
    s.y = target.output(x);
    s.err = inf_dist(s.y, s.yh);
    if (!target.state_set.contains(x) || !source.state_set.contains(xh)) {
      tr.target_excursion |= !target.state_set.contains(x);
      tr.source_excursion |= !source.state_set.contains(xh);
      if (tr.first_excursion < 0) tr.first_excursion = static_cast<std::int64_t>(t);
    }
    if (t < T) {
      s.uh = controller(xh, t);
      s.u.assign(target.m, 0.0);
      K(x, xh, s.uh, s.u);
      source.step_fn(xh, s.uh, xh_next);
      target.step_fn(x, s.u, x_next);
    } else {
      s.uh.assign(source.m, nan);
      s.u.assign(target.m, nan);
    }
    tr.max_err = std::max(tr.max_err, s.err);
    tr.steps.push_back(std::move(s));
    xh.swap(xh_next);
    x.swap(x_next);
  }
  return tr;
}

std::string SoundnessReport::to_text() const {
  std::ostringstream os;
  os << "trials = " << trials << "\n"
     << "completed = " << completed << "\n"
     << "match_failures = " << match_failures << "\n"
     << "truncated = " << truncated << "\n"
     << "violations = " << violations << "\n"
     << "max_err = " << fmt_double(max_err) << "\n"
     << "worst_trial = " << worst_trial << "\n";
  if (!first_match_failure.empty()) os << "first_match_failure = " << first_match_failure << "\n";
  return os.str();
}

SoundnessReport monte_carlo_soundness(const SystemDef& target, const SystemDef& source,
                                      const Interface& K, const Mlp& V, const JointDataset& ds,
                                      std::uint64_t trials, std::uint64_t T, double eps,
                                      std::uint64_t seed) {
  struct Outcome {
    bool matched = false;
    std::string why;
    bool truncated = false;
    double max_err = 0.0;
  };
  std::vector<Outcome> out(trials);
  for_each_shard(trials, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const std::uint64_t s = splitmix64(seed + i);
      Rng rng(s);
      const Box& X0h = source.initial_set;
      Vec xh0(source.n);
      for (std::size_t d = 0; d < source.n; ++d) xh0[d] = rng.uniform(X0h.lb[d], X0h.ub[d]);
      Match m;
      try {
        m = match_initial(xh0, ds, V, target, source);
      } catch (const Error& err) {
        out[i].why = err.what();
        continue;
      }
      out[i].matched = true;
      const ControllerDef ctl = builtin_controller("random(" + std::to_string(s) + ")", source);
      const Trace tr = run_transfer(target, source, ctl, K, xh0, m.x0, T);
      out[i].truncated = tr.truncated;
      out[i].max_err = tr.truncated ? INFINITY : tr.max_err;
    }
  });
  SoundnessReport r;
  r.trials = trials;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].matched) {
      ++r.match_failures;
      if (r.first_match_failure.empty()) r.first_match_failure = out[i].why;
      continue;
    }
    ++r.completed;
    if (out[i].truncated) ++r.truncated;
    if (out[i].max_err > eps) ++r.violations;
    if (out[i].max_err > r.max_err || r.worst_trial < 0) {
      r.max_err = out[i].max_err;
      r.worst_trial = static_cast<std::int64_t>(i);
    }
  }
  return r;
}

}  // namespace nsr
