#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "miloc/config.hpp"
#include "miloc/scenario.hpp"

namespace miloc {

/// Runs body(i) for i in [0, count) on `threads` workers (0: hardware
/// concurrency). Each index runs exactly once; callers write results into
/// per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// One estimator run on one topology and noise realization.
struct TrialRecord {
  std::size_t agents = 0;
  std::size_t topology = 0;
  std::size_t noise = 0;
  std::vector<Deployment> truth;
  std::vector<Vec3> est_position;
  std::vector<EulerAngles> est_euler;  // NaN for multilateration
  std::vector<double> error;           // per-agent Euclidean position error, m
  double peb = 0.0;                    // agent-1 PEB of this topology (NaN if singular)
  double final_cost = 0.0;             // NaN for closed-form estimators
  double reference_cost = 0.0;         // perfect-init cost, NaN when not computed
  bool global_min = false;
  bool converged = false;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string status = "ok";
};

struct SummaryRecord {
  std::size_t agents = 0;
  Scheme scheme = Scheme::Cooperative;
  Estimator estimator = Estimator::NumLs;
  std::string init;
  double mean_rmse = 0.0;     // mean over topologies of the agent-1 RMSE
  double mean_peb = 0.0;      // mean over topologies of the agent-1 PEB
  double outlier_frac = 0.0;  // agent-1 error > 10 x PEB
  double global_min_frac = 0.0;
  std::size_t trials = 0;
  std::vector<double> errors;  // agent-1 errors, ascending
};

struct ExperimentResult {
  std::vector<TrialRecord> trials;
  std::vector<SummaryRecord> summaries;
};

/// Monte-Carlo sweep: for every M, `topologies` x `noise` trials of the
/// configured estimator. Per-trial failures are recorded in `status`.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Runs one trial. Exposed for tests and benchmarks.
TrialRecord run_trial(const ExperimentConfig& cfg, const Topology& top, std::size_t topology_id,
                      std::size_t noise_id, double peb);

/// Topology of sweep entry (M, t); identical across estimators and schemes.
Topology experiment_topology(const ExperimentConfig& cfg, std::size_t num_agents, std::size_t topology_id);

/// Empirical CDF: distinct sorted values with the fraction of samples <= value.
/// Throws EmptyInput.
std::vector<std::pair<double, double>> compute_cdf(std::span<const double> values);

/// Writes trials.csv, summary.csv, one cdf_<label>.csv per summary and
/// config.echo into `dir`. Throws Io with the offending path.
void emit_outputs(const ExperimentResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir);

std::string cdf_label(const SummaryRecord& s);

struct PebRecord {
  std::size_t agents = 0;
  Scheme scheme = Scheme::Cooperative;
  double mean_peb = 0.0;
  std::size_t topologies = 0;
  std::size_t singular = 0;
  std::vector<double> per_topology;  // agent-1 PEB, NaN when singular
};

/// Agent-1 PEB for both schemes on the same topologies, for every M.
std::vector<PebRecord> run_peb_sweep(const ExperimentConfig& cfg);
void emit_peb(const std::vector<PebRecord>& records, const ExperimentConfig& cfg, const std::filesystem::path& dir);

struct CalibrationResult {
  double resistance_ohm = 0.0;
  double mean_peb = 0.0;
  int iterations = 0;
};

/// Finds the coil resistance at which the mean non-cooperative agent-1 PEB
/// for M = 1 equals `target_peb_m`. The PEB is proportional to R, so a
/// secant update converges in a couple of rounds.
CalibrationResult calibrate_resistance(const ExperimentConfig& cfg, double target_peb_m, double rel_tol = 1e-9);

struct GainStats {
  std::vector<double> agent_anchor_db;  // 20 log10 |h| per subcoil pair, ascending
  std::vector<double> agent_agent_db;
  double noise_level_db = 0.0;
  double frac_below_noise = 0.0;  // over all gains
  std::size_t topologies = 0;
};

/// Noiseless subcoil gains of the cooperative link set for M agents over
/// the configured number of topologies.
GainStats channel_gain_stats(const ExperimentConfig& cfg, std::size_t num_agents);
void emit_gains(const GainStats& stats, const ExperimentConfig& cfg, const std::filesystem::path& dir);

double median_of_sorted(std::span<const double> sorted);

}  // namespace miloc
