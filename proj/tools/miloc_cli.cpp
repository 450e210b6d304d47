// Command-line front end: PEB sweeps, Monte-Carlo simulations, channel-gain
// statistics, resistance calibration and topology fixtures.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "miloc/config.hpp"
#include "miloc/error.hpp"
#include "miloc/harness.hpp"
#include "miloc/scenario.hpp"

namespace {

using namespace miloc;

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

// Flags that map one-to-one onto config keys. Flags given on the command
// line override the config file.
struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    for (const auto& [key, value] : values) set_config_value(cfg, key, value);
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  o.add(app, "--agents", "agents", "agent counts: M, A..B or A,B,C");
  o.add(app, "--topologies", "topologies", "random topologies per M");
  o.add(app, "--seed", "seed", "master seed");
  o.add(app, "--threads", "threads", "worker threads (0: all cores)");
  o.add(app, "--out", "out", "output directory");
}

int run_peb(const Overrides& o) {
  const auto cfg = o.resolve();
  const auto records = run_peb_sweep(cfg);
  emit_peb(records, cfg, cfg.out);
  for (const auto& r : records) {
    std::printf("M=%-3zu %-8s mean PEB %.4f mm  (%zu topologies, %zu singular)\n", r.agents, to_string(r.scheme),
                r.mean_peb * 1e3, r.topologies, r.singular);
  }
  return 0;
}

int run_simulate(const Overrides& o) {
  const auto cfg = o.resolve();
  const auto result = run_experiment(cfg);
  emit_outputs(result, cfg, cfg.out);
  std::size_t failed = 0;
  for (const auto& t : result.trials) failed += t.status != "ok";
  for (const auto& s : result.summaries) {
    std::printf("M=%-3zu %-8s %-15s RMSE %.4f mm  PEB %.4f mm  outliers %.4f  global-min %.4f  (%zu trials)\n",
                s.agents, to_string(s.scheme), to_string(s.estimator), s.mean_rmse * 1e3, s.mean_peb * 1e3,
                s.outlier_frac, s.global_min_frac, s.trials);
  }
  if (failed) std::fprintf(stderr, "%zu trials failed; see the status column of trials.csv\n", failed);
  return 0;
}

int run_gains(const Overrides& o) {
  const auto cfg = o.resolve();
  if (cfg.agents.size() != 1) throw Error(ErrorKind::Config, "gains takes a single agent count");
  const auto stats = channel_gain_stats(cfg, cfg.agents.front());
  emit_gains(stats, cfg, cfg.out);
  std::printf("gains below noise level (%.1f dB): %.2f%%\n", stats.noise_level_db, stats.frac_below_noise * 100);
  std::printf("median agent-anchor %.2f dB\n", median_of_sorted(stats.agent_anchor_db));
  if (!stats.agent_agent_db.empty()) std::printf("median agent-agent %.2f dB\n", median_of_sorted(stats.agent_agent_db));
  return 0;
}

int run_calibrate(const Overrides& o, double target_mm) {
  auto cfg = o.resolve();
  const auto res = calibrate_resistance(cfg, target_mm * 1e-3);
  cfg.resistance_ohm = res.resistance_ohm;
  std::printf("resistance_ohm = %.17g\n", res.resistance_ohm);
  std::printf("# mean non-coop PEB (M=1, %zu topologies) %.6f mm after %d rounds\n", cfg.topologies,
              res.mean_peb * 1e3, res.iterations);
  if (o.values.count("out")) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream echo(std::filesystem::path(cfg.out) / "config.echo");
    echo << echo_config(cfg);
    if (!echo) throw Error(ErrorKind::Io, "cannot write config.echo in " + cfg.out);
  }
  return 0;
}

int run_topology_sample(const Overrides& o, std::size_t index, const std::string& file) {
  const auto cfg = o.resolve();
  if (cfg.agents.size() != 1) throw Error(ErrorKind::Config, "topology sample takes a single agent count");
  const auto top = experiment_topology(cfg, cfg.agents.front(), index);
  if (file.empty() || file == "-") {
    write_topology(std::cout, top);
  } else {
    std::ofstream out(file);
    write_topology(out, top);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + file);
  }
  return 0;
}

int run_topology_check(const Overrides& o, const std::string& file) {
  const auto cfg = o.resolve();
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + file);
  const auto top = read_topology(in);
  const auto issues = check_topology(top, cfg.min_dist());
  for (const auto& i : issues) std::printf("%s\n", i.c_str());
  std::printf("%s: %zu agents, %zu anchors, %zu issues\n", file.c_str(), top.agents.size(), top.anchors.size(),
              issues.size());
  return issues.empty() ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magneto-inductive localization simulator"};
  app.require_subcommand(1);

  Overrides peb_o, sim_o, gains_o, cal_o, sample_o, check_o;

  auto* peb = app.add_subcommand("peb", "mean position error bounds over random topologies");
  add_common(peb, peb_o);

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo RMSE / error CDF run");
  add_common(simulate, sim_o);
  sim_o.add(simulate, "--estimator", "estimator", "numls | pairml | turbols | multilateration");
  sim_o.add(simulate, "--init", "init", "perfect | random:<k> | pairml");
  sim_o.add(simulate, "--scheme", "scheme", "coop | noncoop");
  sim_o.add(simulate, "--noise", "noise", "noise realizations per topology");
  sim_o.add(simulate, "--sigma", "sigma", "noise standard deviation");
  simulate->add_flag_function("--timing", [&sim_o](std::int64_t) { sim_o.values["timing"] = "true"; },
                              "add per-trial wall time to trials.csv");

  auto* gains = app.add_subcommand("gains", "channel-gain CDFs of the cooperative link set");
  add_common(gains, gains_o);

  double target_mm = 2.186;
  auto* calibrate = app.add_subcommand("calibrate", "coil resistance that yields a target mean non-coop PEB at M=1");
  add_common(calibrate, cal_o);
  calibrate->add_option("--target-peb-mm", target_mm, "target mean PEB in mm")->capture_default_str();

  auto* topology = app.add_subcommand("topology", "topology fixtures");
  topology->require_subcommand(1);
  std::size_t index = 0;
  std::string sample_file, check_file;
  auto* sample = topology->add_subcommand("sample", "write sweep topology <index> for a single M");
  add_common(sample, sample_o);
  sample->add_option("--index", index, "topology index within the sweep")->capture_default_str();
  sample->add_option("--file", sample_file, "output file (default: stdout)");
  auto* check = topology->add_subcommand("check", "validate a topology file against the sampler invariants");
  check->add_option("--config", check_o.config, "key = value configuration file")->check(CLI::ExistingFile);
  check->add_option("file", check_file, "topology file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*peb) return run_peb(peb_o);
    if (*simulate) return run_simulate(sim_o);
    if (*gains) return run_gains(gains_o);
    if (*calibrate) return run_calibrate(cal_o, target_mm);
    if (*sample) return run_topology_sample(sample_o, index, sample_file);
    if (*check) return run_topology_check(check_o, check_file);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::Config ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntimeError;
  }
  return kRuntimeError;
}
