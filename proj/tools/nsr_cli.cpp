// nsr: grid generation, training, certification, transfer and Lipschitz checks.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nsr/certifier.hpp"
#include "nsr/config.hpp"
#include "nsr/cosim.hpp"
#include "nsr/cover.hpp"
#include "nsr/mlp.hpp"
#include "nsr/parallel.hpp"
#include "nsr/system.hpp"
#include "nsr/trainer.hpp"

namespace fs = std::filesystem;
using namespace nsr;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

// Materializing T_d beyond this many product cells is refused by gen-grid.
constexpr long double kMaterializeLimit = 5e8L;

struct Options {
  std::string config;
  std::string out = ".";
  std::string system;
  std::string v_path;
  std::string k_path;
  std::string report;
  std::string mode;
  std::int64_t seed = -1;
  std::int64_t horizon = -1;
  std::int64_t trials = -1;
  std::size_t workers = 0;
  bool workers_set = false;
  std::size_t pairs = 10000;
  double lv_max = 10.0;
  double lk_max = 1.0;
  bool zero_interface = false;
  bool quiet = false;
};

void log_run(const std::string& dir, const std::string& line) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream log(fs::path(dir) / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
  log << stamp << ' ' << line << '\n';
}

std::string out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out);
  return (fs::path(o.out) / name).string();
}

RunConfig load_run(const Options& o) {
  if (o.config.empty()) throw Error("--config is required");
  RunConfig rc = load_config(o.config);
  if (!o.mode.empty()) rc.set("train.mode", o.mode);
  if (o.workers_set) rc.workers = o.workers;
  set_worker_count(rc.workers);
  return rc;
}

Mlp load_checked(const std::string& path, const std::string& role, const RunConfig& rc) {
  Mlp net = load(path, role);
  if (net.config_hash != rc.hash()) {
    throw Error(role + " checkpoint '" + path + "' was produced under config " +
                (net.config_hash.empty() ? "-" : net.config_hash) + ", current config is " +
                rc.hash());
  }
  return net;
}

std::string default_path(const Options& o, const std::string& given, const std::string& name) {
  return given.empty() ? (fs::path(o.out) / name).string() : given;
}

int cmd_info(const Options& o) {
  if (!o.system.empty()) {
    std::cout << describe(builtin_system(o.system));
    return kOk;
  }
  if (o.config.empty()) throw Error("info needs --system or --config");
  const RunConfig rc = load_run(o);
  std::cout << "[target]\n" << describe(rc.target) << "[source]\n" << describe(rc.source)
            << "config_hash = " << rc.hash() << "\n";
  return kOk;
}

int cmd_lipcheck(const Options& o) {
  std::vector<SystemDef> systems;
  if (!o.system.empty()) {
    systems.push_back(builtin_system(o.system));
  } else {
    const RunConfig rc = load_run(o);
    systems = {rc.target, rc.source};
  }
  const std::uint64_t seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : 0;
  std::ostringstream os;
  std::size_t violations = 0;
  for (const auto& sys : systems) {
    const auto r = sample_lipschitz_check(sys, o.pairs, seed);
    violations += r.violations();
    os << "system = " << sys.name << "\n"
       << "pairs = " << r.pairs << "\n"
       << "skipped_f = " << r.skipped_f << "\n"
       << "skipped_h = " << r.skipped_h << "\n"
       << "max_ratio_f = " << fmt_double(r.max_ratio_f) << "\n"
       << "max_ratio_h = " << fmt_double(r.max_ratio_h) << "\n"
       << "violations_f = " << r.violations_f << "\n"
       << "violations_h = " << r.violations_h << "\n";
  }
  if (!o.report.empty()) write_file(o.report, os.str());
  std::cout << os.str();
  std::cout << (violations ? "lipcheck: declared constants violated\n" : "lipcheck: ok\n");
  return violations ? kFailed : kOk;
}

int cmd_gen_grid(const Options& o) {
  const RunConfig rc = load_run(o);
  const TrainConfig& t = rc.train;
  std::ostringstream os;
  os << rc.echo() << "config_hash = " << rc.hash() << "\n"
     << "eps = " << fmt_double(t.eps) << "\n"
     << "e_state = " << fmt_double(t.e_state) << "\n"
     << "e_input = " << fmt_double(t.e_input) << "\n";
  const long double target_cells = cover_count(rc.target.state_set, t.e_state);
  const long double source_cells = cover_count(rc.source.state_set, t.e_state);
  auto ld = [](long double v) { return fmt_double(static_cast<double>(v)); };
  os << "target_cells = " << ld(target_cells) << "\n"
     << "source_cells = " << ld(source_cells) << "\n"
     << "input_cells = " << ld(cover_count(rc.source.input_set, t.e_input)) << "\n"
     << "init_cells = " << ld(cover_count(rc.target.initial_set, t.e_state)) << "\n"
     << "source_init_cells = " << ld(cover_count(rc.source.initial_set, t.e_state)) << "\n";
  if (!rc.target.output_coords.empty() && !rc.source.output_coords.empty()) {
    const JointCount c = analytic_joint_count(rc.target, rc.source, t.joint());
    os << "analytic_product = " << ld(c.unfiltered) << "\n"
       << "analytic_td = " << ld(c.filtered) << "\n";
  }
  const bool materialize = target_cells * source_cells <= kMaterializeLimit;
  os << "materialized = " << (materialize ? "yes" : "no") << "\n";
  if (materialize) {
    const JointDataset ds = build_joint_dataset(rc.target, rc.source, t.joint());
    os << "product_size = " << ds.product_size << "\n"
       << "td_size = " << ds.size() << "\n"
       << "pass_rate = " << fmt_double(static_cast<double>(ds.size()) /
                                       static_cast<double>(ds.product_size))
       << "\n"
       << "inputs = " << ds.inputs.size() << "\n"
       << "init_candidates = " << ds.init_candidates.size() << "\n";
  }
  const PrecheckReport p = precheck(rc.target.lipschitz, rc.source.lipschitz, t, o.lv_max, o.lk_max);
  os << "precheck.L_V_max = " << fmt_double(o.lv_max) << "\n"
     << "precheck.L_K_max = " << fmt_double(o.lk_max) << "\n";
  std::istringstream ps(p.summary);
  std::string line;
  while (std::getline(ps, line)) os << "precheck." << line << "\n";
  const std::string path = out_path(o, "grid.txt");
  write_file(path, os.str());
  if (!o.quiet) std::cout << "wrote " << path << "\n";
  return kOk;
}

int cmd_train(const Options& o) {
  RunConfig rc = load_run(o);
  if (o.seed >= 0) rc.set("train.seed", std::to_string(o.seed));
  const TrainConfig& t = rc.train;
  const JointDataset ds = build_joint_dataset(rc.target, rc.source, t.joint());
  if (!o.quiet) {
    std::cout << "dataset td_size=" << ds.size() << " inputs=" << ds.inputs.size()
              << " config_hash=" << rc.hash() << "\n";
  }
  const std::string v_path = out_path(o, "V.ckpt"), k_path = out_path(o, "K.ckpt");
  std::ostringstream history;
  history << rc.echo() << "config_hash = " << rc.hash() << "\n";
  TrainCallbacks cb;
  cb.on_iteration = [&](const IterationRecord& r) { history << format_record(r) << "\n"; };
  cb.on_phase = [&](const PhaseRecord& r, const Mlp& V, const Mlp& K) {
    const std::string line = format_record(r);
    history << line << "\n";
    if (!o.quiet) std::cout << line << std::endl;
    save(V, v_path);
    save(K, k_path);
  };
  const TrainResult res = algorithm1(rc.target, rc.source, ds, t, cb);
  save(res.V, v_path);
  save(res.K, k_path);
  write_file(out_path(o, "history.txt"), history.str());
  write_file(out_path(o, "cert.txt"), rc.echo() + res.report.to_text());
  std::cout << "verdict: " << (res.success ? "pass" : "fail");
  if (!res.success) {
    std::cout << " (failing:";
    for (int id : res.report.failing()) std::cout << ' ' << id;
    std::cout << ")";
  }
  std::cout << " after " << res.iterations << " iterations\n";
  return res.success ? kOk : kFailed;
}

int cmd_certify(const Options& o) {
  const RunConfig rc = load_run(o);
  const Mlp V = load_checked(default_path(o, o.v_path, "V.ckpt"), "V", rc);
  const Mlp K = load_checked(default_path(o, o.k_path, "K.ckpt"), "K", rc);
  const JointDataset ds = build_joint_dataset(rc.target, rc.source, rc.train.joint());
  const DatasetLabels labels = label_dataset(ds, rc.target, rc.source, K, rc.train);
  const CertReport rep = full_certificate(ds, labels, V, K, rc.target, rc.source, rc.train);
  const std::string path = o.report.empty() ? out_path(o, "cert.txt") : o.report;
  write_file(path, rc.echo() + rep.to_text());
  std::cout << "verdict: " << (rep.verdict ? "pass" : "fail") << "\n";
  for (const auto& c : rep.conditions) {
    if (!c.pass) {
      std::cout << "condition " << c.id << " (" << c.name << ") failed: " << c.violations
                << " violation(s), margin " << fmt_double(c.margin) << "\n";
    }
  }
  return rep.verdict ? kOk : kFailed;
}

int cmd_transfer(const Options& o) {
  RunConfig rc = load_run(o);
  if (o.seed >= 0) rc.set("transfer.seed", std::to_string(o.seed));
  if (o.horizon >= 0) rc.set("transfer.horizon", std::to_string(o.horizon));
  if (o.trials >= 0) rc.set("transfer.trials", std::to_string(o.trials));
  const TransferConfig& tc = rc.transfer;
  const Mlp V = load_checked(default_path(o, o.v_path, "V.ckpt"), "V", rc);
  const Interface K = o.zero_interface
                          ? zero_interface(rc.target.input_set)
                          : mlp_interface(load_checked(default_path(o, o.k_path, "K.ckpt"), "K", rc));
  const JointDataset ds = build_joint_dataset(rc.target, rc.source, rc.train.joint());
  const double eps = rc.train.eps;

  const Vec xh0 = tc.x_hat0 ? *tc.x_hat0 : rc.source.initial_set.midpoint();
  Vec x0;
  if (tc.x0) {
    x0 = *tc.x0;
  } else {
    x0 = match_initial(xh0, ds, V, rc.target, rc.source).x0;
  }
  const ControllerDef ctl = builtin_controller(tc.controller, rc.source);
  const Trace tr = run_transfer(rc.target, rc.source, ctl, K, xh0, x0, tc.horizon);
  write_file(out_path(o, "trace.csv"), rc.echo() + "# config_hash = " + rc.hash() + "\n" + tr.to_csv());
  bool ok = !tr.truncated && tr.max_err <= eps;
  std::cout << "trace max_err=" << fmt_double(tr.max_err) << " eps=" << fmt_double(eps)
            << (tr.target_excursion ? " target_excursion" : "")
            << (tr.source_excursion ? " source_excursion" : "")
            << (tr.truncated ? " truncated: " + tr.diagnostic : "") << "\n";
  if (tc.trials > 0) {
    const SoundnessReport s =
        monte_carlo_soundness(rc.target, rc.source, K, V, ds, tc.trials, tc.horizon, eps, tc.seed);
    write_file(out_path(o, "soundness.txt"),
               rc.echo() + "config_hash = " + rc.hash() + "\n" + s.to_text());
    std::cout << "monte_carlo trials=" << s.trials << " completed=" << s.completed
              << " match_failures=" << s.match_failures << " violations=" << s.violations
              << " max_err=" << fmt_double(s.max_err) << "\n";
    ok = ok && s.violations == 0 && s.truncated == 0;
  }
  std::cout << "transfer: " << (ok ? "within eps" : "eps exceeded") << "\n";
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural simulation relations: learn, certify and deploy controller transfer"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", o.config, "experiment config file");
    if (required) opt->required();
    sub->add_option("--workers", o.workers, "worker threads (0 = all cores)")
        ->each([&](const std::string&) { o.workers_set = true; });
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "output directory"); };

  auto* info = app.add_subcommand("info", "describe a builtin system or a config's systems");
  info->add_option("--system", o.system, "builtin system name");
  add_config(info, false);

  auto* lip = app.add_subcommand("lipcheck", "sample-based check of declared Lipschitz constants");
  lip->add_option("--system", o.system, "builtin system name");
  add_config(lip, false);
  lip->add_option("--pairs", o.pairs, "sampled pairs per system");
  lip->add_option("--seed", o.seed, "sampling seed");
  lip->add_option("--report", o.report, "write the report here");

  auto* grid = app.add_subcommand("gen-grid", "dataset metadata and validity precheck");
  add_config(grid, true);
  add_out(grid);
  grid->add_option("--lv-max", o.lv_max, "assumed cap on L_V for the precheck");
  grid->add_option("--lk-max", o.lk_max, "assumed cap on L_K for the precheck");

  auto* train = app.add_subcommand("train", "run the alternating training loop");
  add_config(train, true);
  add_out(train);
  train->add_option("--seed", o.seed, "override train.seed");
  train->add_option("--mode", o.mode, "strict|relaxed")->check(CLI::IsMember({"strict", "relaxed"}));
  train->add_flag("--quiet", o.quiet, "no progress lines");

  auto* cert = app.add_subcommand("certify", "certify a (V, K) pair");
  add_config(cert, true);
  add_out(cert);
  cert->add_option("--v", o.v_path, "V checkpoint (default <out>/V.ckpt)");
  cert->add_option("--k", o.k_path, "K checkpoint (default <out>/K.ckpt)");
  cert->add_option("--report", o.report, "certificate path (default <out>/cert.txt)");
  cert->add_option("--mode", o.mode, "strict|relaxed")->check(CLI::IsMember({"strict", "relaxed"}));

  auto* xfer = app.add_subcommand("transfer", "closed-loop co-simulation through the interface");
  add_config(xfer, true);
  add_out(xfer);
  xfer->add_option("--v", o.v_path, "V checkpoint (default <out>/V.ckpt)");
  xfer->add_option("--k", o.k_path, "K checkpoint (default <out>/K.ckpt)");
  xfer->add_option("--seed", o.seed, "override transfer.seed");
  xfer->add_option("--horizon", o.horizon, "override transfer.horizon");
  xfer->add_option("--trials", o.trials, "override transfer.trials (Monte-Carlo runs)");
  xfer->add_flag("--zero-interface", o.zero_interface, "replace K by u = 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  std::string cmdline;
  for (int i = 1; i < argc; ++i) cmdline += std::string(i > 1 ? " " : "") + argv[i];
  int code = kUsage;
  try {
    if (info->parsed()) code = cmd_info(o);
    else if (lip->parsed()) code = cmd_lipcheck(o);
    else if (grid->parsed()) code = cmd_gen_grid(o);
    else if (train->parsed()) code = cmd_train(o);
    else if (cert->parsed()) code = cmd_certify(o);
    else if (xfer->parsed()) code = cmd_transfer(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    code = kUsage;
  }
  if (train->parsed() || cert->parsed() || xfer->parsed() || grid->parsed()) {
    log_run(o.out, cmdline + " exit=" + std::to_string(code));
  }
  return code;
}
