#include "nsr/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "nsr/parallel.hpp"

namespace nsr {
namespace {

// Directed (upward) rounding through error-free transformations: the exact
// result of a*b or a+b is recovered as rounded + err and bumped one ulp up
// whenever err > 0.
double up_mul(double a, double b) {
  const double p = a * b;
  const double err = std::fma(a, b, -p);
  return err > 0 ? std::nextafter(p, INFINITY) : p;
}

double up_add(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err > 0 ? std::nextafter(s, INFINITY) : s;
}

// Per-shard accumulator merged in shard order.
struct Sweep {
  double margin = INFINITY;
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::vector<Vec> cex;

  void record(double m, bool ok, const std::function<Vec()>& witness) {
    ++checked;
    margin = std::min(margin, m);
    if (!ok) {
      ++violations;
      if (cex.size() < kMaxCounterexamples) cex.push_back(witness());
    }
  }
  void merge(Sweep&& o) {
    margin = std::min(margin, o.margin);
    checked += o.checked;
    violations += o.violations;
    for (auto& c : o.cex) {
      if (cex.size() >= kMaxCounterexamples) break;
      cex.push_back(std::move(c));
    }
  }
  ConditionResult result(int id, std::string name) && {
    ConditionResult r;
    r.id = id;
    r.name = std::move(name);
    r.checked = checked;
    r.violations = violations;
    r.margin = checked == 0 ? 0.0 : margin;
    r.pass = violations == 0;
    r.counterexamples = std::move(cex);
    return r;
  }
};

template <class Fn>
Sweep sweep(std::size_t n, Fn&& body) {
  std::vector<Sweep> parts(shard_count(n));
  for_each_shard(n, [&](std::size_t s, std::size_t b, std::size_t e) { body(parts[s], b, e); });
  Sweep total;
  for (auto& p : parts) total.merge(std::move(p));
  return total;
}

// V over every T_d pair.
std::vector<double> relation_values(const JointDataset& ds, const Mlp& V) {
  std::vector<double> out(ds.size());
  const std::size_t n = ds.target_grid.dim(), nh = ds.source_grid.dim();
  for_each_shard(ds.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    Vec in(n + nh), s1, s2;
    for (std::size_t k = b; k < e; ++k) {
      ds.target_grid.center_into(ds.pairs[k].target, MutSpan(in.data(), n));
      ds.source_grid.center_into(ds.pairs[k].source, MutSpan(in.data() + n, nh));
      out[k] = forward_scalar(V, in, s1, s2);
    }
  });
  return out;
}

ConditionResult step_condition(const JointDataset& ds, const std::vector<double>& v, const Mlp& V,
                               const Mlp& K, const SystemDef& target, const SystemDef& source,
                               const TrainConfig& cfg) {
  const double gate = 0.5 + cfg.eta;
  const std::size_t n = target.n, nh = source.n, mh = source.m;
  Sweep s = sweep(ds.size(), [&](Sweep& acc, std::size_t b, std::size_t e) {
    Vec x(n), xh(nh), kin(n + nh + mh), u, xn(n), xhn(nh), vin(n + nh), s1, s2;
    for (std::size_t k = b; k < e; ++k) {
      if (!(v[k] >= gate)) continue;
      ds.target_grid.center_into(ds.pairs[k].target, x);
      ds.source_grid.center_into(ds.pairs[k].source, xh);
      std::copy(x.begin(), x.end(), kin.begin());
      std::copy(xh.begin(), xh.end(), kin.begin() + n);
      const double need = cfg.mode == StepMode::strict ? v[k] + cfg.eta : 0.5 + 2.0 * cfg.eta;
      for (std::size_t a = 0; a < ds.inputs.size(); ++a) {
        const Vec& uh = ds.inputs[a];
        std::copy(uh.begin(), uh.end(), kin.begin() + n + nh);
        u = forward(K, kin);
        target.step_fn(x, u, xn);
        source.step_fn(xh, uh, xhn);
        std::copy(xn.begin(), xn.end(), vin.begin());
        std::copy(xhn.begin(), xhn.end(), vin.begin() + n);
        const double vn = forward_scalar(V, vin, s1, s2);
        acc.record(vn - need, vn >= need, [&] { return kin; });
      }
    }
  });
  ConditionResult r = std::move(s).result(10, "step");
  r.note = std::string("mode=") + step_mode_name(cfg.mode);
  if (r.checked == 0) r.note += "; vacuous (no pair with V >= 0.5+eta)";
  return r;
}

}  // namespace

const char* step_mode_name(StepMode m) { return m == StepMode::strict ? "strict" : "relaxed"; }

StepMode parse_step_mode(const std::string& s) {
  if (s == "strict") return StepMode::strict;
  if (s == "relaxed") return StepMode::relaxed;
  throw Error("mode must be strict or relaxed, got '" + s + "'");
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw Error("train config: " + msg);
  };
  need(eta > 0, "eta must be > 0");
  need(gamma > 0, "gamma must be > 0");
  need(eps >= gamma, "eps must be >= gamma");
  need(e_state > 0, "e_state must be > 0");
  need(e_input > 0, "e_input must be > 0");
  need(phase_len >= 1, "phase_len (N) must be >= 1");
  need(lr_v > 0 && lr_k > 0, "learning rates must be > 0");
  need(fd_delta > 0, "fd_delta must be > 0");
  need(ce_margin >= 0, "ce_margin must be >= 0");
  need(lipschitz_weight >= 0, "lipschitz_weight must be >= 0");
}

ConditionResult check_init(const JointDataset& ds, const Mlp& V, const TrainConfig& cfg) {
  const double need = 0.5 + cfg.eta;
  const std::size_t n = ds.init_grid.dim(), nh = ds.source_init_grid.dim();
  const std::size_t count = ds.source_init_grid.size;
  Sweep s = sweep(count, [&](Sweep& acc, std::size_t b, std::size_t e) {
    Vec in(n + nh), s1, s2;
    for (std::size_t j = b; j < e; ++j) {
      ds.source_init_grid.center_into(j, MutSpan(in.data() + n, nh));
      double best = -INFINITY;
      for (auto i : ds.candidates_for(j)) {
        ds.init_grid.center_into(i, MutSpan(in.data(), n));
        best = std::max(best, forward_scalar(V, in, s1, s2));
      }
      acc.record(best - need, best >= need, [&] { return ds.source_init_grid.center(j); });
    }
  });
  ConditionResult r = std::move(s).result(7, "init");
  if (ds.init_output_margin < 0) {
    r.note = "no admissible witnesses: eps - L_h_hat*e/2 < 0";
  }
  return r;
}

std::pair<ConditionResult, ConditionResult> check_classification(const JointDataset& ds,
                                                                 const DatasetLabels& labels,
                                                                 const Mlp& V,
                                                                 const TrainConfig& cfg) {
  if (labels.cls.size() != ds.size()) throw Error("check_classification: labels do not match T_d");
  const std::vector<double> v = relation_values(ds, V);
  const double hi = 0.5 + cfg.eta, lo = 0.5 - cfg.eta;
  auto witness = [&](std::size_t k) {
    Vec w = ds.target_state(k);
    Vec xh = ds.source_state(k);
    w.insert(w.end(), xh.begin(), xh.end());
    return w;
  };
  Sweep pos = sweep(ds.size(), [&](Sweep& acc, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      if (labels.cls[k] > 0) acc.record(v[k] - hi, v[k] >= hi, [&] { return witness(k); });
    }
  });
  Sweep neg = sweep(ds.size(), [&](Sweep& acc, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      if (labels.cls[k] < 0) acc.record(lo - v[k], v[k] < lo, [&] { return witness(k); });
    }
  });
  auto r8 = std::move(pos).result(8, "positive");
  auto r9 = std::move(neg).result(9, "negative");
  r9.note = "strict: requires V < 0.5-eta (margin must be > 0)";
  return {std::move(r8), std::move(r9)};
}

ConditionResult check_step(const JointDataset& ds, const Mlp& V, const Mlp& K,
                           const SystemDef& target, const SystemDef& source,
                           const TrainConfig& cfg) {
  return step_condition(ds, relation_values(ds, V), V, K, target, source, cfg);
}

ValidityResult check_validity(const LipschitzConstants& t, const LipschitzConstants& s, double L_V,
                              double L_K, const TrainConfig& cfg) {
  if (t.x < 0 || t.u < 0 || t.h < 0 || s.x < 0 || s.u < 0 || s.h < 0 || L_V < 0 || L_K < 0) {
    throw Error("check_validity: Lipschitz constants must be nonnegative");
  }
  const double e2 = cfg.e_state / 2.0, eh2 = cfg.e_input / 2.0;  // exact halvings
  ValidityResult r;

  // (11)
  const double target_part =
      up_mul(t.h, up_add(up_mul(t.x, e2), up_mul(up_mul(t.u, L_K), std::max(e2, eh2))));
  const double source_part = up_mul(s.h, up_add(up_mul(s.x, e2), up_mul(s.u, eh2)));
  r.c11.lhs = up_add(target_part, source_part);
  r.c11.rhs = cfg.gamma;

  // (12)
  const double state_term = up_mul(std::max(t.x, s.x), e2);
  const double input_term = std::max(up_mul(up_mul(t.u, L_K), e2), up_mul(s.u, eh2));
  r.c12.lhs = up_mul(L_V, up_add(state_term, input_term));
  r.c12.rhs = 2.0 * cfg.eta;
  const double input_term_alt =
      std::max(up_mul(up_mul(t.u, L_K), std::max(e2, eh2)), up_mul(s.u, eh2));
  r.lhs12_with_input_perturbation = up_mul(L_V, up_add(state_term, input_term_alt));

  // (13)
  r.c13.lhs = up_mul(L_V, e2);
  r.c13.rhs = cfg.eta;

  int id = 11;
  for (ConditionResult* c : {&r.c11, &r.c12, &r.c13}) {
    c->id = id++;
    c->name = "validity";
    c->checked = 1;
    c->pass = c->lhs <= c->rhs;
    c->violations = c->pass ? 0 : 1;
    c->margin = c->rhs - c->lhs;
  }
  r.c12.note = "as printed; with K input perturbation max(e/2,e_hat/2): lhs = " +
               fmt_double(r.lhs12_with_input_perturbation);
  return r;
}

PrecheckReport precheck(const LipschitzConstants& t, const LipschitzConstants& s,
                        const TrainConfig& cfg, double L_V_max, double L_K_max) {
  PrecheckReport p;
  auto lhs_at = [&](double e) {
    TrainConfig c = cfg;
    c.e_state = e;
    return check_validity(t, s, L_V_max, L_K_max, c);
  };
  // Each LHS is nondecreasing in e; find sup{e : lhs(e) <= rhs} by bisection.
  auto largest = [&](auto pick) -> double {
    const double tiny = 1e-300;
    {
      auto r = lhs_at(tiny);
      if (!pick(r).pass) return 0.0;
    }
    double lo = tiny, hi = 1.0;
    while (pick(lhs_at(hi)).pass) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (pick(lhs_at(mid)).pass) lo = mid; else hi = mid;
    }
    return lo;
  };
  p.e_max_11 = largest([](const ValidityResult& r) { return r.c11; });
  p.e_max_12 = largest([](const ValidityResult& r) { return r.c12; });
  p.e_max_13 = cfg.eta > 0 ? largest([](const ValidityResult& r) { return r.c13; }) : 0.0;
  p.e_max = std::min({p.e_max_11, p.e_max_12, p.e_max_13});
  const double e_lv = std::min(p.e_max_12, p.e_max_13);
  p.gamma_needed = std::isfinite(e_lv) && e_lv > 0 ? lhs_at(e_lv).c11.lhs : lhs_at(1e-300).c11.lhs;
  p.feasible = cfg.eta > 0 && p.e_max > 0;
  std::ostringstream os;
  os << "e_max_11 = " << fmt_double(p.e_max_11) << "\n"
     << "e_max_12 = " << fmt_double(p.e_max_12) << "\n"
     << "e_max_13 = " << fmt_double(p.e_max_13) << "\n"
     << "e_max = " << fmt_double(p.e_max) << "\n"
     << "gamma_needed = " << fmt_double(p.gamma_needed) << "\n"
     << "feasible = " << (p.feasible ? "yes" : "no") << "\n";
  p.summary = os.str();
  return p;
}

CertReport full_certificate(const JointDataset& ds, const DatasetLabels& labels, const Mlp& V,
                            const Mlp& K, const SystemDef& target, const SystemDef& source,
                            const TrainConfig& cfg) {
  CertReport rep;
  rep.eps = cfg.eps;
  rep.eta = cfg.eta;
  rep.gamma = cfg.gamma;
  rep.e_state = cfg.e_state;
  rep.e_input = cfg.e_input;
  rep.mode = cfg.mode;
  rep.td_size = ds.size();
  rep.inputs = ds.inputs.size();
  rep.L_V = lipschitz_upper_bound(V);
  rep.L_K = lipschitz_upper_bound(K);
  rep.L_V_spectral = spectral_lipschitz_bound(V);
  rep.L_K_spectral = spectral_lipschitz_bound(K);
  rep.config_hash = cfg.config_hash.empty() ? V.config_hash : cfg.config_hash;

  const std::vector<double> v = relation_values(ds, V);
  rep.conditions.push_back(check_init(ds, V, cfg));
  auto [c8, c9] = check_classification(ds, labels, V, cfg);
  rep.conditions.push_back(std::move(c8));
  rep.conditions.push_back(std::move(c9));
  rep.conditions.push_back(step_condition(ds, v, V, K, target, source, cfg));
  auto val = check_validity(target.lipschitz, source.lipschitz, rep.L_V, rep.L_K, cfg);
  rep.conditions.push_back(std::move(val.c11));
  rep.conditions.push_back(std::move(val.c12));
  rep.conditions.push_back(std::move(val.c13));
  if (cfg.mode == StepMode::relaxed) {
    rep.notes.push_back("condition 10 certified in relaxed mode: V(successor) >= 0.5+2*eta");
  }
  rep.verdict = rep.recompute_verdict();
  return rep;
}

const ConditionResult& CertReport::condition(int id) const {
  for (const auto& c : conditions) {
    if (c.id == id) return c;
  }
  throw Error("certificate has no condition " + std::to_string(id));
}

std::vector<int> CertReport::failing() const {
  std::vector<int> out;
  for (const auto& c : conditions) {
    if (!c.pass) out.push_back(c.id);
  }
  return out;
}

std::uint64_t CertReport::total_violations() const {
  std::uint64_t t = 0;
  for (const auto& c : conditions) t += c.violations;
  return t;
}

std::string CertReport::to_text() const {
  std::ostringstream os;
  os << "nsr-cert 1\n";
  os << "verdict = " << (verdict ? "pass" : "fail") << "\n";
  os << "failing =";
  for (int id : failing()) os << ' ' << id;
  os << "\n";
  os << "config_hash = " << (config_hash.empty() ? "-" : config_hash) << "\n";
  os << "mode = " << step_mode_name(mode) << "\n";
  os << "eps = " << fmt_double(eps) << "\n";
  os << "eta = " << fmt_double(eta) << "\n";
  os << "gamma = " << fmt_double(gamma) << "\n";
  os << "e_state = " << fmt_double(e_state) << "\n";
  os << "e_input = " << fmt_double(e_input) << "\n";
  os << "td_size = " << td_size << "\n";
  os << "inputs = " << inputs << "\n";
  os << "L_V = " << fmt_double(L_V) << "\n";
  os << "L_K = " << fmt_double(L_K) << "\n";
  os << "L_V_spectral = " << fmt_double(L_V_spectral) << "\n";
  os << "L_K_spectral = " << fmt_double(L_K_spectral) << "\n";
  for (std::size_t i = 0; i < notes.size(); ++i) os << "note." << i << " = " << notes[i] << "\n";
  for (const auto& c : conditions) {
    const std::string p = "cond." + std::to_string(c.id) + ".";
    os << p << "name = " << c.name << "\n";
    os << p << "status = " << (c.pass ? "pass" : "fail") << "\n";
    os << p << "margin = " << fmt_double(c.margin) << "\n";
    os << p << "checked = " << c.checked << "\n";
    os << p << "violations = " << c.violations << "\n";
    if (c.id >= 11) {
      os << p << "lhs = " << fmt_double(c.lhs) << "\n";
      os << p << "rhs = " << fmt_double(c.rhs) << "\n";
    }
    if (!c.note.empty()) os << p << "note = " << c.note << "\n";
    for (std::size_t k = 0; k < c.counterexamples.size(); ++k) {
      os << p << "cex." << k << " =";
      for (double x : c.counterexamples[k]) os << ' ' << fmt_double(x);
      os << "\n";
    }
  }
  return os.str();
}

namespace {

double to_double(const std::string& s) {
  if (s == "nan") return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error("certificate: bad number '" + s + "'");
  return v;
}

bool to_status(const std::string& s) {
  if (s == "pass") return true;
  if (s == "fail") return false;
  throw Error("expected pass or fail, got '" + s + "'");
}

}  // namespace

CertReport CertReport::from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  bool magic = false;
  CertReport r;
  std::map<int, ConditionResult> conds;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!magic) {
      if (line != "nsr-cert 1") throw Error("certificate: missing 'nsr-cert 1' magic");
      magic = true;
      continue;
    }
    const auto eq = line.find(" =");
    if (eq == std::string::npos) throw Error("certificate line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 2);
    if (!val.empty() && val[0] == ' ') val.erase(0, 1);
    try {
      if (key == "verdict") r.verdict = to_status(val);
      else if (key == "failing") continue;
      else if (key == "config_hash") r.config_hash = val == "-" ? "" : val;
      else if (key == "mode") r.mode = parse_step_mode(val);
      else if (key == "eps") r.eps = to_double(val);
      else if (key == "eta") r.eta = to_double(val);
      else if (key == "gamma") r.gamma = to_double(val);
      else if (key == "e_state") r.e_state = to_double(val);
      else if (key == "e_input") r.e_input = to_double(val);
      else if (key == "td_size") r.td_size = std::stoull(val);
      else if (key == "inputs") r.inputs = std::stoull(val);
      else if (key == "L_V") r.L_V = to_double(val);
      else if (key == "L_K") r.L_K = to_double(val);
      else if (key == "L_V_spectral") r.L_V_spectral = to_double(val);
      else if (key == "L_K_spectral") r.L_K_spectral = to_double(val);
      else if (key.rfind("note.", 0) == 0) r.notes.push_back(val);
      else if (key.rfind("cond.", 0) == 0) {
        const auto dot = key.find('.', 5);
        const int id = std::stoi(key.substr(5, dot - 5));
        const std::string field = key.substr(dot + 1);
        ConditionResult& c = conds[id];
        c.id = id;
        if (field == "name") c.name = val;
        else if (field == "status") c.pass = to_status(val);
        else if (field == "margin") c.margin = to_double(val);
        else if (field == "checked") c.checked = std::stoull(val);
        else if (field == "violations") c.violations = std::stoull(val);
        else if (field == "lhs") c.lhs = to_double(val);
        else if (field == "rhs") c.rhs = to_double(val);
        else if (field == "note") c.note = val;
        else if (field.rfind("cex.", 0) == 0) {
          Vec w;
          std::istringstream ws(val);
          std::string tok;
          while (ws >> tok) w.push_back(to_double(tok));
          c.counterexamples.push_back(std::move(w));
        } else {
          throw Error("unknown field '" + field + "'");
        }
      } else {
        throw Error("unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      throw Error("certificate line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception&) {
      throw Error("certificate line " + std::to_string(line_no) + ": bad value '" + val + "'");
    }
  }
  if (!magic) throw Error("certificate: missing 'nsr-cert 1' magic");
  for (auto& [id, c] : conds) r.conditions.push_back(std::move(c));
  return r;
}

}  // namespace nsr
