#include "seqcoord/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "seqcoord/acceptance.hpp"
#include "seqcoord/config.hpp"
#include "seqcoord/errors.hpp"

namespace seqcoord {

namespace {

using nlohmann::json;

enum class Level { debug, info, warn, error, off };

// SEQCOORD_LOG = debug | info | warn | error | off; default warn.
Level log_level() {
  const char* env = std::getenv("SEQCOORD_LOG");
  const std::string v = env ? env : "warn";
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  if (v == "error") return Level::error;
  if (v == "off") return Level::off;
  return Level::warn;
}

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err), level_(log_level()) {}
  void info(const std::string& msg) const { emit(Level::info, "info", msg); }
  void debug(const std::string& msg) const { emit(Level::debug, "debug", msg); }
  void warn(const std::string& msg) const { emit(Level::warn, "warn", msg); }

 private:
  void emit(Level at, const char* tag, const std::string& msg) const {
    if (level_ <= at) err_ << "[" << tag << "] " << msg << '\n';
  }
  std::ostream& err_;
  Level level_;
};

struct Options {
  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string only;
  bool codebooks = false;
};

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  return dir;
}

RunConfig load(const Options& o, const Log& log) {
  RunConfig cfg = load_config(o.config);
  if (o.seed) cfg.experiment.seed = *o.seed;
  if (o.threads) {
    if (*o.threads < 0) throw ConfigError("--threads must be >= 0");
    cfg.experiment.threads = *o.threads;
  }
  log.debug("config " + o.config + " hash " + config_hash(cfg));
  return cfg;
}

std::string num(double v, int digits = 12) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

int cmd_rate(const Options& o, std::ostream& out, const Log& log) {
  RunManifest manifest;
  manifest.started = utc_now();
  const RunConfig cfg = load(o, log);
  const RdInstance& inst = cfg.experiment.instance;
  const RdSolution sol = solve_rate(inst);
  const double target_info = directed_information(inst.source, inst.target_policy).total / inst.source.horizon();
  manifest.finished = utc_now();
  manifest.config_hash = config_hash(cfg);
  manifest.seed = cfg.experiment.seed;

  out << std::left << std::setw(22) << "rate" << num(sol.rate) << " nats/step\n"
      << std::setw(22) << "achieved_constraint" << num(sol.achieved_constraint) << " (budget " << num(inst.delta) << ")\n"
      << std::setw(22) << "iterations" << sol.report.iterations << " (" << sol.report.method
      << (sol.report.converged ? ", converged" : ", NOT converged") << ", gap bound " << num(sol.report.residual) << ")\n"
      << std::setw(22) << "target_information" << num(target_info) << " nats/step\n";
  if (!sol.report.converged) log.warn("rate solver did not certify convergence");

  const auto dir = prepare_out_dir(o.out_dir);
  const json doc{{"manifest", to_json(manifest)}, {"solution", to_json(sol)}, {"target_information", target_info}};
  write_text((dir / "rate.json").string(), doc.dump(2) + "\n");
  log.info("wrote " + (dir / "rate.json").string());
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, const Log& log) {
  RunManifest manifest;
  manifest.started = utc_now();
  const RunConfig cfg = load(o, log);
  if (cfg.experiment.n_ladder.empty()) throw ConfigError("missing field 'experiment.n_ladder'");
  const auto dir = prepare_out_dir(o.out_dir);
  const ExperimentResult res = run_experiment(cfg.experiment);
  manifest.finished = utc_now();
  manifest.config_hash = config_hash(cfg);
  manifest.seed = cfg.experiment.seed;

  out << "rate_ref " << num(res.rate_ref) << " nats/step\n";
  out << std::left << std::setw(8) << "N" << std::setw(16) << "distortion" << std::setw(12) << "se" << std::setw(16)
      << "H/(NT)" << std::setw(16) << "cap" << "error_rate\n";
  for (const BlockRecord& r : res.records) {
    out << std::setw(8) << r.block << std::setw(16) << num(r.distortion_mean, 6) << std::setw(12) << num(r.distortion_se, 4)
        << std::setw(16) << num(r.entropy_norm, 6) << std::setw(16) << num(r.entropy_cap, 6) << num(r.error_rate, 6) << '\n';
    for (std::size_t t = 0; t < r.params.capped.size(); ++t) {
      if (r.params.capped[t]) log.warn("N=" + std::to_string(r.block) + ": M_" + std::to_string(t) + " clamped at the branch cap");
    }
  }

  const json doc{{"manifest", to_json(manifest)}, {"config", to_json(cfg)}, {"result", to_json(res)}};
  write_text((dir / "result.json").string(), doc.dump(2) + "\n");
  write_text((dir / "results.csv").string(), results_csv(res));
  if (o.codebooks) {
    for (std::size_t k = 0; k < res.records.size(); ++k) {
      const SequentialCode code = code_for_record(cfg.experiment, res, k);
      if (code.codebook.node_count() > kMaxMaterializedNodes) {
        log.warn("N=" + std::to_string(res.records[k].block) + ": codebook too large to serialize");
        continue;
      }
      const auto path = dir / ("codebook_N" + std::to_string(res.records[k].block) + ".json");
      write_text(path.string(), codebook_to_json(code.codebook, cfg.actions).dump(1) + "\n");
    }
  }
  log.info("wrote " + (dir / "result.json").string() + " and results.csv");
  return kExitOk;
}

int cmd_bounds(const Options& o, std::ostream& out, const Log& log) {
  const RunConfig cfg = load(o, log);
  const RdInstance& inst = cfg.experiment.instance;
  const int horizon = inst.source.horizon();
  json rows = json::array();
  auto row = [&](const std::string& label, const std::string& value) {
    out << std::left << std::setw(58) << label << value << '\n';
    rows.push_back({{"quantity", label}, {"value", value}});
  };
  row("R_T(delta): minimal directed information per step", num(solve_rate(inst).rate));
  row("I(X;U)/T of the target policy (value at delta = 0)",
      num(directed_information(inst.source, inst.target_policy).total / horizon));
  if (horizon > 1) {
    row("R_bar(delta): test-channel upper bound", "n/a (T>1)");
  } else {
    const Eigen::MatrixXd metric =
        cfg.action_metric ? *cfg.action_metric : Eigen::MatrixXd(2.0 * discrete_metric(cfg.actions.size()));
    if (!satisfies_uniform_lipschitz(inst.fc, cfg.states.size(), cfg.actions.size(), metric)) {
      row("R_bar(delta): test-channel upper bound", "n/a (uniform-Lipschitz premise fails for the action metric)");
    } else {
      const Distribution mu(inst.source.factor(0).matrix().row(0).transpose());
      row("R_bar(delta): test-channel upper bound",
          num(kop_bound(mu, MarkovKernel(inst.target_policy.factor(0).matrix()), metric, inst.delta)));
    }
  }
  for (double s : cfg.snr) {
    row("C_av(s=" + num(s) + "): AWGN capacity, average power 1/2 log(1+s)", num(awgn_capacity_avg(s)));
    const PeakCapacity pk = awgn_capacity_peak(s);
    row("C_pk(s=" + num(s) + "): AWGN capacity, peak power (grid lower bound)",
        num(pk.value) + " (BA gap " + num(pk.ba_gap) + ", binning " + num(pk.bin_error) + ")");
  }
  const auto dir = prepare_out_dir(o.out_dir);
  write_text((dir / "bounds.json").string(), json{{"config_hash", config_hash(cfg)}, {"rows", rows}}.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"seqcoord: sequential rate-distortion solver, tree-code simulator and bounds"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "overrides experiment.seed");
    sub->add_option("--threads", o.threads, "worker threads for Monte Carlo trials (0 = all cores)");
  };
  CLI::App* rate = app.add_subcommand("rate", "solve R_T(delta) for the config's instance");
  CLI::App* simulate = app.add_subcommand("simulate", "run tree codes over the N ladder");
  CLI::App* bounds = app.add_subcommand("bounds", "print R_T, the test-channel bound and AWGN capacities");
  CLI::App* selftest = app.add_subcommand("selftest", "run the acceptance suite");
  common(rate);
  common(simulate);
  common(bounds);
  simulate->add_flag("--codebooks", o.codebooks, "also write each codebook as JSON");
  selftest->add_option("--only", o.only, "run a single named criterion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const Log log(err);
  try {
    if (*rate) return cmd_rate(o, out, log);
    if (*simulate) return cmd_simulate(o, out, log);
    if (*bounds) return cmd_bounds(o, out, log);
    if (*selftest) return run_acceptance(out, o.only) == 0 ? kExitOk : kExitFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GuardError& e) {
    err << "guard violation: " << e.what() << '\n';
    return kExitGuard;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace seqcoord
