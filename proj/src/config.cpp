#include "nsr/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace nsr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  const std::string& section;
  const std::string& key;
  const std::string& value;
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const {
    std::string where = line ? "config line " + std::to_string(line) : "override";
    throw Error(where + ": [" + section + "] " + key + ": " + what);
  }
  double number() const {
    double v = 0.0;
    const char* b = value.data();
    const char* e = b + value.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail("expected a number, got '" + value + "'");
    return v;
  }
  std::uint64_t count() const {
    std::uint64_t v = 0;
    const char* b = value.data();
    const char* e = b + value.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail("expected a nonnegative integer, got '" + value + "'");
    return v;
  }
  bool flag() const {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail("expected true or false, got '" + value + "'");
  }
  Vec numbers() const {
    Vec out;
    std::istringstream is(value);
    std::string tok;
    while (is >> tok) {
      Field f{section, key, tok, line};
      out.push_back(f.number());
    }
    if (out.empty()) fail("expected a list of numbers");
    return out;
  }
  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    for (double d : numbers()) {
      if (d < 1 || d != static_cast<double>(static_cast<std::size_t>(d))) {
        fail("layer widths must be positive integers");
      }
      out.push_back(static_cast<std::size_t>(d));
    }
    return out;
  }
};

using Section = std::map<std::string, std::pair<std::string, std::size_t>>;

SystemDef build_system(const std::string& name, const Section& sec) {
  auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>* {
    auto it = sec.find(key);
    return it == sec.end() ? nullptr : &it->second;
  };
  const auto* builtin = get("builtin");
  const auto* dynamics = get("dynamics");
  if (!builtin && !dynamics) throw Error("config: [" + name + "] needs builtin or dynamics");
  if (builtin && dynamics) throw Error("config: [" + name + "] sets both builtin and dynamics");

  std::map<std::string, double> params;
  for (const auto& [key, v] : sec) {
    if (key.rfind("param.", 0) == 0) params[key.substr(6)] = Field{name, key, v.first, v.second}.number();
  }
  SystemDef sys;
  if (builtin) {
    if (!params.empty()) throw Error("config: [" + name + "] param.* needs dynamics, not builtin");
    sys = builtin_system(builtin->first);
  } else {
    sys = system_from_dynamics(dynamics->first, params);
  }

  std::map<std::string, Box*> boxes = {{"state", &sys.state_set},
                                       {"initial", &sys.initial_set},
                                       {"input", &sys.input_set},
                                       {"output", &sys.output_set}};
  for (const auto& [key, v] : sec) {
    Field f{name, key, v.first, v.second};
    if (key == "builtin" || key == "dynamics" || key.rfind("param.", 0) == 0) continue;
    if (key == "name") {
      sys.name = f.value;
    } else if (key == "L_x") {
      sys.lipschitz.x = f.number();
    } else if (key == "L_u") {
      sys.lipschitz.u = f.number();
    } else if (key == "L_h") {
      sys.lipschitz.h = f.number();
    } else if (key.size() > 3 && (key.ends_with("_lb") || key.ends_with("_ub")) &&
               boxes.count(key.substr(0, key.size() - 3))) {
      Box* b = boxes.at(key.substr(0, key.size() - 3));
      Vec vals = f.numbers();
      Vec& target = key.ends_with("_lb") ? b->lb : b->ub;
      if (vals.size() != target.size()) {
        f.fail("expected " + std::to_string(target.size()) + " values, got " +
               std::to_string(vals.size()));
      }
      target = vals;
    } else {
      f.fail("unknown key");
    }
  }
  for (auto& [key, b] : boxes) {
    try {
      *b = Box(b->lb, b->ub);
    } catch (const Error& e) {
      throw Error("config: [" + name + "] " + key + " box: " + e.what());
    }
  }
  try {
    sys.validate();
  } catch (const Error& e) {
    throw Error("config: [" + name + "] " + e.what());
  }
  return sys;
}

void apply_train(const Section& sec, TrainConfig& t) {
  for (const auto& [key, v] : sec) {
    Field f{"train", key, v.first, v.second};
    if (key == "eps") t.eps = f.number();
    else if (key == "eta") t.eta = f.number();
    else if (key == "gamma") t.gamma = f.number();
    else if (key == "e_state") t.e_state = f.number();
    else if (key == "e_input") t.e_input = f.number();
    else if (key == "phase_len") t.phase_len = f.count();
    else if (key == "max_iters") t.max_iters = f.count();
    else if (key == "lr_v") t.lr_v = f.number();
    else if (key == "lr_k") t.lr_k = f.number();
    else if (key == "batch_size") t.batch_size = f.count();
    else if (key == "seed") t.seed = f.count();
    else if (key == "mode") {
      try {
        t.mode = parse_step_mode(f.value);
      } catch (const Error& e) {
        f.fail(e.what());
      }
    } else if (key == "k_loss") {
      if (f.value == "mean_abs") t.k_loss = KLoss::mean_abs;
      else if (f.value == "squared") t.k_loss = KLoss::squared;
      else f.fail("expected mean_abs or squared");
    } else if (key == "fd_delta") t.fd_delta = f.number();
    else if (key == "v_hidden") t.v_hidden = f.sizes();
    else if (key == "k_hidden") t.k_hidden = f.sizes();
    else if (key == "k_passthrough") t.k_passthrough = f.flag();
    else if (key == "ce_margin") t.ce_margin = f.number();
    else if (key == "lipschitz_weight") t.lipschitz_weight = f.number();
    else if (key == "max_restarts") t.max_restarts = static_cast<int>(f.count());
    else f.fail("unknown key");
  }
  try {
    t.validate();
  } catch (const Error& e) {
    throw Error(std::string("config: [train] ") + e.what());
  }
}

void apply_transfer(const Section& sec, TransferConfig& t) {
  for (const auto& [key, v] : sec) {
    Field f{"transfer", key, v.first, v.second};
    if (key == "controller") t.controller = f.value;
    else if (key == "horizon") t.horizon = f.count();
    else if (key == "trials") t.trials = f.count();
    else if (key == "seed") t.seed = f.count();
    else if (key == "x_hat0") t.x_hat0 = f.numbers();
    else if (key == "x0") t.x0 = f.numbers();
    else f.fail("unknown key");
  }
}

void build(RunConfig& rc) {
  static const std::set<std::string> known = {"system.target", "system.source", "train",
                                              "transfer", "run"};
  for (const auto& [name, sec] : rc.raw) {
    if (!known.count(name)) {
      const std::size_t line = sec.empty() ? 0 : sec.begin()->second.second;
      throw Error("config line " + std::to_string(line) + ": unknown section [" + name + "]");
    }
  }
  static const Section empty;
  auto section = [&](const std::string& name) -> const Section& {
    auto it = rc.raw.find(name);
    return it == rc.raw.end() ? empty : it->second;
  };
  if (!rc.raw.count("system.target")) throw Error("config: missing [system.target]");
  if (!rc.raw.count("system.source")) throw Error("config: missing [system.source]");
  rc.target = build_system("system.target", section("system.target"));
  rc.source = build_system("system.source", section("system.source"));
  if (rc.target.l != rc.source.l) {
    throw Error("config: output dimensions differ (target l=" + std::to_string(rc.target.l) +
                ", source l=" + std::to_string(rc.source.l) + ")");
  }
  rc.train = TrainConfig{};
  apply_train(section("train"), rc.train);
  rc.transfer = TransferConfig{};
  apply_transfer(section("transfer"), rc.transfer);
  rc.workers = 0;
  for (const auto& [key, v] : section("run")) {
    Field f{"run", key, v.first, v.second};
    if (key == "workers") rc.workers = f.count();
    else f.fail("unknown key");
  }
  if (rc.transfer.x_hat0 && rc.transfer.x_hat0->size() != rc.source.n) {
    throw Error("config: [transfer] x_hat0 must have " + std::to_string(rc.source.n) + " values");
  }
  if (rc.transfer.x0 && rc.transfer.x0->size() != rc.target.n) {
    throw Error("config: [transfer] x0 must have " + std::to_string(rc.target.n) + " values");
  }
  rc.train.config_hash = rc.hash();
}

}  // namespace

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::hash() const {
  std::string canon;
  for (const auto& [name, sec] : raw) {
    if (name != "train" && name.rfind("system.", 0) != 0) continue;
    canon += "[" + name + "]\n";
    for (const auto& [key, v] : sec) {
      if (name == "train" && key == "mode") continue;
      canon += key + "=" + v.first + "\n";
    }
  }
  return fnv1a_hex(canon);
}

std::string RunConfig::echo() const {
  std::string out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out += "# " + line + "\n";
  for (const auto& o : overrides) out += "# override " + o + "\n";
  return out;
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.rfind('.');
  if (dot == std::string::npos) throw Error("override '" + dotted_key + "' needs section.key");
  raw[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = {value, 0};
  overrides.push_back(dotted_key + " = " + value);
  build(*this);
}

RunConfig parse_config(const std::string& text) {
  RunConfig rc;
  rc.text = text;
  std::istringstream is(text);
  std::string line, section;
  std::size_t no = 0;
  while (std::getline(is, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error("config line " + std::to_string(no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      rc.raw[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(no) + ": expected 'key = value'");
    }
    if (section.empty()) {
      throw Error("config line " + std::to_string(no) + ": key outside any [section]");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error("config line " + std::to_string(no) + ": empty key");
    auto& sec = rc.raw[section];
    if (sec.count(key)) {
      throw Error("config line " + std::to_string(no) + ": duplicate key '" + key + "' in [" +
                  section + "]");
    }
    sec[key] = {value, no};
  }
  build(rc);
  return rc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error("write failed for '" + path + "'");
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

}  // namespace nsr
