#include "miloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "miloc/crlb.hpp"
#include "miloc/error.hpp"

namespace miloc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kTopologyStream = 0;
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kInitStream = 2;

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << std::setprecision(12);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

double agent1_peb(const Topology& top, const CouplingTable& coupling, double sigma, Scheme scheme) {
  if (sigma == 0.0) return 0.0;
  try {
    const auto fim = assemble_fim(top.agents, top.anchors, coupling, sigma, scheme);
    return scheme == Scheme::NonCooperative ? peb_blockwise(fim, 0) : peb(fim, 0);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularFim) throw;
    return kNaN;
  }
}

InitStrategy init_strategy(const ExperimentConfig& cfg, const Topology& top) {
  switch (cfg.init) {
    case InitKind::Perfect: return PerfectInit{top.agents};
    case InitKind::Random: return RandomInit{cfg.random_restarts};
    case InitKind::PairMl: return PairMlInit{};
  }
  return PairMlInit{};
}

void write_trials_csv(const ExperimentResult& result, const ExperimentConfig& cfg, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "M,topology,noise,agent,true_x,true_y,true_z,true_alpha,true_beta,true_gamma,"
         "est_x,est_y,est_z,est_alpha,est_beta,est_gamma,error_m,peb_m,final_cost,reference_cost,"
         "global_min,converged,iterations,status";
  if (cfg.timing) out << ",wall_time_s";
  out << '\n';
  for (const auto& t : result.trials) {
    for (std::size_t m = 0; m < t.truth.size(); ++m) {
      const auto& p = t.truth[m].position();
      const auto& e = t.truth[m].euler();
      const bool have = m < t.est_position.size();
      const Vec3 q = have ? t.est_position[m] : Vec3::Constant(kNaN);
      const EulerAngles f = have ? t.est_euler[m] : EulerAngles{kNaN, kNaN, kNaN};
      out << t.agents << ',' << t.topology << ',' << t.noise << ',' << (m + 1) << ',' << p.x() << ',' << p.y() << ','
          << p.z() << ',' << e.alpha << ',' << e.beta << ',' << e.gamma << ',' << q.x() << ',' << q.y() << ','
          << q.z() << ',' << f.alpha << ',' << f.beta << ',' << f.gamma << ','
          << (m < t.error.size() ? t.error[m] : kNaN) << ',' << (m == 0 ? t.peb : kNaN) << ',' << t.final_cost
          << ',' << t.reference_cost << ',' << (t.global_min ? 1 : 0) << ',' << (t.converged ? 1 : 0) << ','
          << t.iterations << ',' << t.status;
      if (cfg.timing) out << ',' << t.wall_time_s;
      out << '\n';
    }
  }
  finish(out, path);
}

}  // namespace

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  unsigned n = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  n = static_cast<unsigned>(std::min<std::size_t>(n, count));
  if (n <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

Topology experiment_topology(const ExperimentConfig& cfg, std::size_t num_agents, std::size_t topology_id) {
  const std::uint64_t seed = derive_seed(cfg.seed, {num_agents, topology_id, kTopologyStream});
  Rng rng(seed);
  auto top = sample_topology(num_agents, cfg.room(), cfg.anchors(), cfg.min_dist(), rng);
  top.seed = seed;
  return top;
}

TrialRecord run_trial(const ExperimentConfig& cfg, const Topology& top, std::size_t topology_id,
                      std::size_t noise_id, double peb_value) {
  const std::size_t M = top.num_agents();
  const CouplingTable coupling = cfg.coupling();
  const Room room = cfg.room();

  TrialRecord rec;
  rec.agents = M;
  rec.topology = topology_id;
  rec.noise = noise_id;
  rec.truth = top.agents;
  rec.peb = peb_value;
  rec.final_cost = kNaN;
  rec.reference_cost = kNaN;

  try {
    Rng noise_rng = make_rng(cfg.seed, {M, topology_id, kNoiseStream, noise_id});
    Rng init_rng = make_rng(cfg.seed, {M, topology_id, kInitStream, noise_id});
    const auto meas = synthesize_measurements(top, coupling, cfg.scheme, cfg.sigma, noise_rng);
    const LsProblem prob = make_problem(top, meas, coupling);

    const auto start = std::chrono::steady_clock::now();
    std::vector<Deployment> est;
    const bool least_squares = cfg.estimator == Estimator::NumLs || cfg.estimator == Estimator::TurboLs;
    SolveReport rep;
    if (least_squares) {
      const InitStrategy init = cfg.estimator == Estimator::TurboLs ? InitStrategy{PairMlInit{}}
                                                                     : init_strategy(cfg, top);
      rep = estimate(prob, init, room, init_rng);
      est = unpack(rep.estimate);
      rec.final_cost = rep.final_cost;
      rec.converged = rep.converged;
      rec.iterations = rep.iterations;
    } else if (cfg.estimator == Estimator::PairMl) {
      est = pair_ml_all(prob, room);
      rec.converged = true;
    } else {
      rec.converged = true;
      std::vector<LinkMeasurement> agent_links;
      for (std::size_t m = 0; m < M; ++m) {
        agent_links.clear();
        for (const auto& l : prob.links()) {
          if (l.tx == m && l.kind == LinkKind::AgentAnchor) agent_links.push_back(l);
        }
        const auto ranges = ml_ranges(agent_links, prob.anchors(), M, coupling);
        const auto fix = multilaterate(ranges, room);
        rec.converged = rec.converged && fix.converged;
        rec.iterations += fix.iterations;
        est.emplace_back(fix.position, EulerAngles{kNaN, kNaN, kNaN});
      }
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    for (std::size_t m = 0; m < M; ++m) {
      rec.est_position.push_back(est[m].position());
      rec.est_euler.push_back(est[m].euler());
      rec.error.push_back((est[m].position() - top.agents[m].position()).norm());
    }

    if (least_squares) {
      const bool perfect = cfg.estimator == Estimator::NumLs && cfg.init == InitKind::Perfect;
      const bool noncoop = cfg.scheme == Scheme::NonCooperative;
      const double own = noncoop ? rep.agent_costs.front() : rep.final_cost;
      if (perfect) {
        rec.reference_cost = own;
        rec.global_min = true;
      } else if (cfg.reference_solve) {
        Rng unused(0);
        const auto ref = estimate(prob, PerfectInit{top.agents}, room, unused);
        rec.reference_cost = noncoop ? ref.agent_costs.front() : ref.final_cost;
        rec.global_min = own <= rec.reference_cost + 1e-12;
      }
    }
  } catch (const Error& e) {
    rec.status = to_string(e.kind());
    rec.error.assign(M, kNaN);
  }
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const CouplingTable coupling = cfg.coupling();
  ExperimentResult result;

  for (const std::size_t M : cfg.agents) {
    std::vector<std::vector<TrialRecord>> per_topology(cfg.topologies);
    parallel_for(cfg.topologies, cfg.threads, [&](std::size_t t) {
      const Topology top = experiment_topology(cfg, M, t);
      const double p = agent1_peb(top, coupling, cfg.sigma, cfg.scheme);
      auto& slot = per_topology[t];
      slot.reserve(cfg.noise);
      for (std::size_t k = 0; k < cfg.noise; ++k) slot.push_back(run_trial(cfg, top, t, k, p));
    });

    SummaryRecord s;
    s.agents = M;
    s.scheme = cfg.scheme;
    s.estimator = cfg.estimator;
    s.init = cfg.estimator == Estimator::NumLs ? init_label(cfg.init, cfg.random_restarts) : "";
    double rmse_sum = 0.0, peb_sum = 0.0;
    std::size_t rmse_n = 0, peb_n = 0, outliers = 0, outlier_n = 0, global_min = 0;
    for (auto& trials : per_topology) {
      double sq = 0.0;
      std::size_t ok = 0;
      for (const auto& t : trials) {
        if (t.status != "ok") continue;
        const double e = t.error.front();
        sq += e * e;
        ++ok;
        s.errors.push_back(e);
        if (t.global_min) ++global_min;
        if (std::isfinite(t.peb) && t.peb > 0.0) {
          ++outlier_n;
          if (e > 10.0 * t.peb) ++outliers;
        }
      }
      if (ok > 0) {
        rmse_sum += std::sqrt(sq / static_cast<double>(ok));
        ++rmse_n;
      }
      if (!trials.empty() && std::isfinite(trials.front().peb)) {
        peb_sum += trials.front().peb;
        ++peb_n;
      }
      s.trials += ok;
      for (auto& t : trials) result.trials.push_back(std::move(t));
    }
    s.mean_rmse = rmse_n ? rmse_sum / static_cast<double>(rmse_n) : kNaN;
    s.mean_peb = peb_n ? peb_sum / static_cast<double>(peb_n) : kNaN;
    s.outlier_frac = outlier_n ? static_cast<double>(outliers) / static_cast<double>(outlier_n) : kNaN;
    s.global_min_frac = s.trials ? static_cast<double>(global_min) / static_cast<double>(s.trials) : kNaN;
    std::sort(s.errors.begin(), s.errors.end());
    result.summaries.push_back(std::move(s));
  }
  return result;
}

std::vector<std::pair<double, double>> compute_cdf(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "CDF of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

std::string cdf_label(const SummaryRecord& s) {
  std::string label = "M" + std::to_string(s.agents) + "_" + to_string(s.scheme) + "_" + to_string(s.estimator);
  if (!s.init.empty()) {
    std::string init = s.init;
    std::replace(init.begin(), init.end(), ':', '-');
    label += "_" + init;
  }
  return label;
}

void emit_outputs(const ExperimentResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  ensure_dir(dir);
  write_trials_csv(result, cfg, dir / "trials.csv");

  const auto summary_path = dir / "summary.csv";
  auto summary = open_output(summary_path);
  summary << "M,scheme,estimator,mean_rmse_m,mean_peb_m,outlier_frac,trials\n";
  for (const auto& s : result.summaries) {
    summary << s.agents << ',' << to_string(s.scheme) << ',' << to_string(s.estimator) << ',' << s.mean_rmse << ','
            << s.mean_peb << ',' << s.outlier_frac << ',' << s.trials << '\n';
  }
  finish(summary, summary_path);

  for (const auto& s : result.summaries) {
    const auto path = dir / ("cdf_" + cdf_label(s) + ".csv");
    auto out = open_output(path);
    out << "error_m,cdf\n";
    if (!s.errors.empty()) {
      for (const auto& [v, f] : compute_cdf(s.errors)) out << v << ',' << f << '\n';
    }
    finish(out, path);
  }

  const auto echo_path = dir / "config.echo";
  auto echo = open_output(echo_path);
  echo << echo_config(cfg);
  finish(echo, echo_path);
}

std::vector<PebRecord> run_peb_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const CouplingTable coupling = cfg.coupling();
  std::vector<PebRecord> out;
  for (const std::size_t M : cfg.agents) {
    std::vector<double> coop(cfg.topologies), noncoop(cfg.topologies);
    parallel_for(cfg.topologies, cfg.threads, [&](std::size_t t) {
      const Topology top = experiment_topology(cfg, M, t);
      noncoop[t] = agent1_peb(top, coupling, cfg.sigma, Scheme::NonCooperative);
      coop[t] = agent1_peb(top, coupling, cfg.sigma, Scheme::Cooperative);
    });
    for (auto [scheme, values] : {std::pair{Scheme::Cooperative, &coop}, std::pair{Scheme::NonCooperative, &noncoop}}) {
      PebRecord r;
      r.agents = M;
      r.scheme = scheme;
      r.topologies = cfg.topologies;
      r.per_topology = *values;
      double sum = 0.0;
      std::size_t n = 0;
      for (double v : *values) {
        if (std::isfinite(v)) {
          sum += v;
          ++n;
        } else {
          ++r.singular;
        }
      }
      r.mean_peb = n ? sum / static_cast<double>(n) : kNaN;
      out.push_back(std::move(r));
    }
  }
  return out;
}

void emit_peb(const std::vector<PebRecord>& records, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  ensure_dir(dir);
  const auto path = dir / "peb.csv";
  auto out = open_output(path);
  out << "M,scheme,mean_peb_m,topologies,singular\n";
  for (const auto& r : records) {
    out << r.agents << ',' << to_string(r.scheme) << ',' << r.mean_peb << ',' << r.topologies << ',' << r.singular
        << '\n';
  }
  finish(out, path);
  const auto echo_path = dir / "config.echo";
  auto echo = open_output(echo_path);
  echo << echo_config(cfg);
  finish(echo, echo_path);
}

CalibrationResult calibrate_resistance(const ExperimentConfig& cfg, double target_peb_m, double rel_tol) {
  if (!(target_peb_m > 0.0)) throw Error(ErrorKind::Config, "target PEB must be positive");
  ExperimentConfig probe = cfg;
  probe.agents = {1};
  CalibrationResult res;
  res.resistance_ohm = cfg.resistance_ohm;
  for (res.iterations = 1; res.iterations <= 20; ++res.iterations) {
    probe.resistance_ohm = res.resistance_ohm;
    const auto sweep = run_peb_sweep(probe);
    res.mean_peb = sweep[1].mean_peb;  // non-cooperative entry
    if (!std::isfinite(res.mean_peb)) throw Error(ErrorKind::SingularFim, "calibration PEB is not finite");
    if (std::abs(res.mean_peb / target_peb_m - 1.0) <= rel_tol) return res;
    res.resistance_ohm *= target_peb_m / res.mean_peb;
  }
  return res;
}

GainStats channel_gain_stats(const ExperimentConfig& cfg, std::size_t num_agents) {
  cfg.validate();
  const CouplingTable coupling = cfg.coupling();
  std::vector<std::vector<double>> anchor_db(cfg.topologies), agent_db(cfg.topologies);
  parallel_for(cfg.topologies, cfg.threads, [&](std::size_t t) {
    const Topology top = experiment_topology(cfg, num_agents, t);
    for (const auto& l : model_links(top, coupling, Scheme::Cooperative)) {
      auto& dst = l.kind == LinkKind::AgentAnchor ? anchor_db[t] : agent_db[t];
      for (int i = 0; i < 9; ++i) dst.push_back(20.0 * std::log10(std::abs(l.h.data()[i])));
    }
  });
  GainStats s;
  s.topologies = cfg.topologies;
  for (std::size_t t = 0; t < cfg.topologies; ++t) {
    s.agent_anchor_db.insert(s.agent_anchor_db.end(), anchor_db[t].begin(), anchor_db[t].end());
    s.agent_agent_db.insert(s.agent_agent_db.end(), agent_db[t].begin(), agent_db[t].end());
  }
  std::sort(s.agent_anchor_db.begin(), s.agent_anchor_db.end());
  std::sort(s.agent_agent_db.begin(), s.agent_agent_db.end());
  s.noise_level_db = 20.0 * std::log10(cfg.sigma);
  const auto below = [&](const std::vector<double>& v) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), s.noise_level_db) - v.begin());
  };
  const std::size_t total = s.agent_anchor_db.size() + s.agent_agent_db.size();
  s.frac_below_noise =
      total ? static_cast<double>(below(s.agent_anchor_db) + below(s.agent_agent_db)) / static_cast<double>(total)
            : 0.0;
  return s;
}

void emit_gains(const GainStats& stats, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  ensure_dir(dir);
  // At most 1001 CDF points per link kind.
  auto write_cdf = [&](const std::vector<double>& sorted, const std::string& name) {
    const auto path = dir / name;
    auto out = open_output(path);
    out << "gain_db,cdf\n";
    const std::size_t n = sorted.size();
    if (n > 0) {
      const std::size_t points = std::min<std::size_t>(n, 1001);
      for (std::size_t q = 0; q < points; ++q) {
        const std::size_t i = points == 1 ? n - 1 : q * (n - 1) / (points - 1);
        out << sorted[i] << ',' << static_cast<double>(i + 1) / static_cast<double>(n) << '\n';
      }
    }
    finish(out, path);
  };
  write_cdf(stats.agent_anchor_db, "gains_agent_anchor.csv");
  write_cdf(stats.agent_agent_db, "gains_agent_agent.csv");

  const auto path = dir / "gains_summary.csv";
  auto out = open_output(path);
  out << "kind,count,median_db,frac_below_noise\n";
  auto row = [&](const char* kind, const std::vector<double>& v) {
    const auto below = std::lower_bound(v.begin(), v.end(), stats.noise_level_db) - v.begin();
    out << kind << ',' << v.size() << ',' << (v.empty() ? kNaN : median_of_sorted(v)) << ','
        << (v.empty() ? kNaN : static_cast<double>(below) / static_cast<double>(v.size())) << '\n';
  };
  row("agent_anchor", stats.agent_anchor_db);
  row("agent_agent", stats.agent_agent_db);
  out << "all," << stats.agent_anchor_db.size() + stats.agent_agent_db.size() << ",nan," << stats.frac_below_noise
      << '\n';
  finish(out, path);
  const auto echo_path = dir / "config.echo";
  auto echo = open_output(echo_path);
  echo << echo_config(cfg);
  finish(echo, echo_path);
}

double median_of_sorted(std::span<const double> sorted) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyInput, "median of an empty sample");
  const std::size_t n = sorted.size();
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

}  // namespace miloc
