// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Usage: miloc_acceptance [output-dir]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "miloc/crlb.hpp"
#include "miloc/error.hpp"
#include "miloc/harness.hpp"
#include "miloc/pair_ml.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace miloc;

namespace {

// Reference values read off the published mean-PEB curves (mm).
constexpr double kPebNonCoopM1 = 2.186e-3;
constexpr double kPebCoopM5 = 1.259e-3;

int failures = 0;

void report(const std::string& id, bool ok, const std::string& what) {
  std::printf("%s  %-4s %s\n", ok ? "PASS" : "FAIL", id.c_str(), what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const PebRecord& find(const std::vector<PebRecord>& recs, std::size_t M, Scheme s) {
  for (const auto& r : recs)
    if (r.agents == M && r.scheme == s) return r;
  throw Error(ErrorKind::EmptyInput, "missing PEB record");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return median_of_sorted(v);
}

// Agent-1 RMSE of every topology with its standard error across topologies.
std::pair<double, double> rmse_with_se(const ExperimentResult& res) {
  std::map<std::size_t, std::pair<double, int>> acc;
  for (const auto& t : res.trials) {
    if (t.status != "ok") continue;
    auto& a = acc[t.topology];
    a.first += t.error[0] * t.error[0];
    ++a.second;
  }
  std::vector<double> v;
  for (const auto& [id, a] : acc) v.push_back(std::sqrt(a.first / a.second));
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

std::vector<double> wall_times(const ExperimentResult& res) {
  std::vector<double> v;
  for (const auto& t : res.trials) v.push_back(t.wall_time_s);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig sim(ExperimentConfig cfg, std::size_t M, Scheme scheme, Estimator est, InitKind init, int restarts = 1) {
  cfg.agents = {M};
  cfg.scheme = scheme;
  cfg.estimator = est;
  cfg.init = init;
  cfg.random_restarts = restarts;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  const auto t_start = std::chrono::steady_clock::now();

  ExperimentConfig base;  // reference physical setup, T = 100, K = 20
  base.topologies = 100;
  base.noise = 20;

  // 1. Calibrate R on one topology stream, verify on another.
  ExperimentConfig cal_cfg = base;
  cal_cfg.topologies = 20000;
  cal_cfg.seed = 1001;
  const auto cal = calibrate_resistance(cal_cfg, kPebNonCoopM1, 1e-9);
  base.resistance_ohm = cal.resistance_ohm;

  ExperimentConfig peb_cfg = base;
  peb_cfg.agents = parse_agent_list("1..10");
  peb_cfg.topologies = 5000;
  const auto pebs = run_peb_sweep(peb_cfg);
  emit_peb(pebs, peb_cfg, out / "peb");
  const double noncoop1 = find(pebs, 1, Scheme::NonCooperative).mean_peb;
  report("1", std::abs(noncoop1 / kPebNonCoopM1 - 1.0) <= 0.05,
         fmt("calibrated R = %.6g ohm; mean non-coop PEB (M=1, %zu fresh topologies) = %.4f mm, target 2.186 mm +-5%%",
             cal.resistance_ohm, peb_cfg.topologies, noncoop1 * 1e3));

  // 2. Cooperation gain at M = 10.
  const double coop10 = find(pebs, 10, Scheme::Cooperative).mean_peb;
  const double noncoop10 = find(pebs, 10, Scheme::NonCooperative).mean_peb;
  const double gain = noncoop10 / coop10;
  report("2", gain >= 2.5 && gain <= 3.2,
         fmt("PEB ratio non-coop/coop at M=10 = %.3f (%.4f / %.4f mm), band [2.5, 3.2]", gain, noncoop10 * 1e3,
             coop10 * 1e3));

  // 3. Coop PEB strictly decreasing in M; M = 5 near 1.259 mm.
  {
    bool decreasing = true;
    std::string curve;
    for (std::size_t M = 1; M <= 10; ++M) {
      const double v = find(pebs, M, Scheme::Cooperative).mean_peb;
      curve += fmt("%s%.3f", M == 1 ? "" : " ", v * 1e3);
      if (M > 1 && !(v < find(pebs, M - 1, Scheme::Cooperative).mean_peb)) decreasing = false;
    }
    const double coop5 = find(pebs, 5, Scheme::Cooperative).mean_peb;
    const double dev = coop5 / kPebCoopM5 - 1.0;
    report("3", decreasing && std::abs(dev) <= 0.10,
           fmt("coop mean PEB M=1..10 [mm]: %s; strictly decreasing: %s; M=5 off 1.259 mm by %+.1f%% (limit 10%%)",
               curve.c_str(), decreasing ? "yes" : "no", dev * 100));
  }

  // 4. Perfectly initialized numLS attains the bound.
  std::map<std::pair<Scheme, std::size_t>, ExperimentResult> perfect;
  {
    bool ok = true;
    std::string detail;
    for (auto scheme : {Scheme::Cooperative, Scheme::NonCooperative}) {
      for (std::size_t M : {1, 5, 10}) {
        auto res = run_experiment(sim(base, M, scheme, Estimator::NumLs, InitKind::Perfect));
        const auto& s = res.summaries[0];
        const double ratio = s.mean_rmse / s.mean_peb;
        ok = ok && ratio >= 0.97 && ratio <= 1.05;
        detail += fmt(" %s/M%zu=%.3f", to_string(scheme), M, ratio);
        perfect.emplace(std::pair{scheme, M}, std::move(res));
      }
    }
    report("4", ok, "RMSE/PEB, band [0.97, 1.05]:" + detail);
  }

  // 5. turboLS reaches the perfect-init minimum.
  const auto turbo = run_experiment(sim(base, 10, Scheme::Cooperative, Estimator::TurboLs, InitKind::PairMl));
  const auto& perfect_coop10 = perfect.at({Scheme::Cooperative, 10}).summaries[0];
  {
    const auto& s = turbo.summaries[0];
    const double med_t = median_of_sorted(s.errors), med_p = median_of_sorted(perfect_coop10.errors);
    const double shift = med_t / med_p - 1.0;
    report("5", s.global_min_frac == 1.0 && s.trials >= 1000 && std::abs(shift) <= 0.02,
           fmt("coop M=10 turboLS: %zu trials, global-minimum fraction %.4f (need 1), median error %.4f mm vs "
               "perfect-init %.4f mm (%+.2f%%, limit 2%%), outlier fraction %.4f",
               s.trials, s.global_min_frac, med_t * 1e3, med_p * 1e3, shift * 100, s.outlier_frac));
  }

  // 6. Random initialization, non-cooperative M = 10.
  {
    const auto r1 = run_experiment(sim(base, 10, Scheme::NonCooperative, Estimator::NumLs, InitKind::Random, 1));
    const auto r5 = run_experiment(sim(base, 10, Scheme::NonCooperative, Estimator::NumLs, InitKind::Random, 5));
    const double g1 = r1.summaries[0].global_min_frac;
    const double o5 = r5.summaries[0].outlier_frac;
    report("6", g1 >= 0.30 && g1 <= 0.50 && o5 >= 0.05 && o5 <= 0.18,
           fmt("Random(1) global-minimum fraction %.4f, band [0.30, 0.50]; Random(5) outlier fraction %.4f, band "
               "[0.05, 0.18] (Random(1) outliers %.4f, Random(5) global-minimum %.4f)",
               g1, o5, r1.summaries[0].outlier_frac, r5.summaries[0].global_min_frac));
  }

  // 7. Estimator ordering by median error at M = 10.
  {
    const auto ml = run_experiment(sim(base, 10, Scheme::NonCooperative, Estimator::Multilateration, InitKind::Perfect));
    const auto pm = run_experiment(sim(base, 10, Scheme::NonCooperative, Estimator::PairMl, InitKind::Perfect));
    const double m_ml = median_of_sorted(ml.summaries[0].errors);
    const double m_pm = median_of_sorted(pm.summaries[0].errors);
    const double m_tb = median_of_sorted(turbo.summaries[0].errors);
    report("7", m_ml > m_pm && m_pm > m_tb,
           fmt("median error M=10: multilateration %.3f mm > pairML %.3f mm > coop turboLS %.4f mm", m_ml * 1e3,
               m_pm * 1e3, m_tb * 1e3));
  }

  // 8. Channel-gain statistics, coop M = 10.
  {
    const auto g = channel_gain_stats(base, 10);
    emit_gains(g, base, out / "gains");
    const double aa = median_of_sorted(g.agent_agent_db), an = median_of_sorted(g.agent_anchor_db);
    report("8", g.frac_below_noise >= 0.02 && g.frac_below_noise <= 0.08 && aa > an,
           fmt("gains below -100 dB: %.2f%%, band [2%%, 8%%]; median agent-agent %.2f dB vs agent-anchor %.2f dB",
               g.frac_below_noise * 100, aa, an));
  }

  // 9. Property suite.
  {
    bool all = true;
    auto sub = [&all](const std::string& id, bool ok, const std::string& what) {
      report(id, ok, what);
      all = all && ok;
    };

    double worst = 0.0;
    for (auto est : {Estimator::PairMl, Estimator::TurboLs, Estimator::NumLs}) {
      for (auto scheme : {Scheme::Cooperative, Scheme::NonCooperative}) {
        auto cfg = sim(base, 5, scheme, est, InitKind::Perfect);
        cfg.sigma = 0.0;
        cfg.topologies = 50;
        cfg.noise = 1;
        for (const auto& t : run_experiment(cfg).trials) {
          for (double e : t.error) worst = std::max(worst, std::isfinite(e) ? e : INFINITY);
        }
      }
    }
    sub("9a", worst < 1e-8, fmt("noiseless pairML / turboLS / numLS worst position error %.2e m (< 1e-8)", worst));

    Rng rng(9001);
    double jac = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto [tx, rx] = testing::random_link(rng);
      const auto J = channel_jacobian(tx, rx, 3e-5);
      for (int end = 0; end < 2; ++end) {
        const auto fd = testing::fd_channel_jacobian(tx, rx, 3e-5, end);
        const auto& an = end == 0 ? J.d_tx : J.d_rx;
        double diff = 0.0, scale = 0.0;
        for (int k = 0; k < 6; ++k) {
          diff = std::max(diff, (an[k] - fd[k]).norm());
          scale = std::max(scale, fd[k].norm());
        }
        jac = std::max(jac, diff / scale);
      }
    }
    sub("9b", jac < 1e-5, fmt("channel Jacobian vs central differences, 1000 links: max relative error %.2e (< 1e-5)", jac));

    {
      const auto top = experiment_topology(base, 1, 0);
      const auto coupling = base.coupling();
      const auto fim = assemble_fim(top.agents, top.anchors, coupling, base.sigma, Scheme::NonCooperative);
      const Mat6 N = fim.block(0, 0);
      const Mat6 mc = testing::monte_carlo_hessian(top.agents[0], top.anchors, coupling(0, 1), base.sigma, 10000, rng);
      double dev = 0.0;
      int dominant = 0;
      for (int k = 0; k < 6; ++k)
        for (int l = 0; l < 6; ++l)
          if (std::abs(N(k, l)) >= 0.2 * std::sqrt(N(k, k) * N(l, l))) {
            ++dominant;
            dev = std::max(dev, std::abs(mc(k, l) / N(k, l) - 1.0));
          }
      sub("9c", dev < 0.03,
          fmt("FIM vs Monte-Carlo likelihood curvature (1e4 draws): max deviation %.3f%% over %d dominant entries", dev * 100,
              dominant));
    }

    {
      std::normal_distribution<double> n;
      double orth = 0.0, det = 0.0;
      const Deployment anchor(Vec3::Zero(), {0.3, 0.2, -0.7});
      for (int i = 0; i < 10000; ++i) {
        CMat3 h;
        for (int k = 0; k < 9; ++k) h(k / 3, k % 3) = {n(rng), n(rng)};
        const Mat3 O = decompose_link(h, anchor).orientation;
        orth = std::max(orth, (O.transpose() * O - Mat3::Identity()).norm());
        det = std::max(det, std::abs(O.determinant() - 1.0));
      }
      sub("9d", orth < 1e-12 && det < 1e-12,
          fmt("pairML orientation over 1e4 random matrices: max |O^T O - I| %.1e, max |det - 1| %.1e", orth, det));
    }

    {
      double asym = 0.0, neg = 0.0;
      for (std::size_t t = 0; t < 200; ++t) {
        const auto top = experiment_topology(base, 10, t);
        for (auto scheme : {Scheme::Cooperative, Scheme::NonCooperative}) {
          const auto fim = assemble_fim(top.agents, top.anchors, base.coupling(), base.sigma, scheme);
          const double norm = fim.matrix.norm();
          asym = std::max(asym, (fim.matrix - fim.matrix.transpose()).norm() / norm);
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fim.matrix, Eigen::EigenvaluesOnly);
          neg = std::max(neg, -es.eigenvalues().minCoeff() / norm);
        }
      }
      sub("9e", asym <= 1e-10 && neg <= 1e-10,
          fmt("FIM over 200 M=10 topologies: max relative asymmetry %.1e, most negative eigenvalue %.1e x norm", asym, neg));
    }

    {
      std::size_t violations = 0, compared = 0;
      for (std::size_t M = 1; M <= 10; ++M) {
        const auto& c = find(pebs, M, Scheme::Cooperative).per_topology;
        const auto& nc = find(pebs, M, Scheme::NonCooperative).per_topology;
        for (std::size_t t = 0; t < c.size(); ++t) {
          if (!std::isfinite(c[t]) || !std::isfinite(nc[t])) continue;
          ++compared;
          if (c[t] > nc[t] + 1e-12) ++violations;
        }
      }
      sub("9f", violations == 0, fmt("coop PEB <= non-coop PEB on %zu topology/M pairs: %zu violations", compared, violations));
    }

    {
      const auto r1 = rmse_with_se(perfect.at({Scheme::NonCooperative, 1}));
      bool flat = true;
      std::string detail = fmt("M=1 %.4f+-%.4f", r1.first * 1e3, r1.second * 1e3);
      for (std::size_t M : {5, 10}) {
        const auto rm = rmse_with_se(perfect.at({Scheme::NonCooperative, M}));
        const double z = (rm.first - r1.first) / std::hypot(rm.second, r1.second);
        flat = flat && std::abs(z) <= 3.0;
        detail += fmt(", M=%zu %.4f+-%.4f (z=%+.2f)", M, rm.first * 1e3, rm.second * 1e3, z);
      }
      sub("9g", flat, "non-coop perfect-init RMSE flat in M within 3 standard errors [mm]: " + detail);
    }
    report("9", all, "property suite");
  }

  // 10. Determinism.
  {
    auto cfg = sim(base, 4, Scheme::Cooperative, Estimator::NumLs, InitKind::Random, 2);
    cfg.topologies = 6;
    cfg.noise = 4;
    const fs::path a = out / "determinism_a", b = out / "determinism_b";
    cfg.threads = 1;
    emit_outputs(run_experiment(cfg), cfg, a);
    auto cfg_b = cfg;
    cfg_b.threads = 3;
    emit_outputs(run_experiment(cfg_b), cfg, b);
    bool same = true;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      same = same && slurp(entry.path()) == slurp(b / entry.path().filename());
    }
    report("10", same && files >= 4, fmt("repeat run (1 vs 3 threads) byte-identical across %zu output files", files));
  }

  // 11. Timing order (medians only; absolute times are hardware-bound).
  {
    auto timed = [&](Scheme scheme, Estimator est) {
      auto cfg = sim(base, 10, scheme, est, InitKind::PairMl);
      cfg.topologies = 20;
      cfg.noise = 5;
      cfg.threads = 1;
      cfg.timing = true;
      cfg.reference_solve = false;
      return median(wall_times(run_experiment(cfg)));
    };
    const double t_pm = timed(Scheme::NonCooperative, Estimator::PairMl);
    const double t_ml = timed(Scheme::NonCooperative, Estimator::Multilateration);
    const double t_nc = timed(Scheme::NonCooperative, Estimator::TurboLs);
    const double t_c = timed(Scheme::Cooperative, Estimator::TurboLs);
    report("11", t_pm < t_ml && t_ml < t_nc && t_nc < t_c,
           fmt("median estimator time M=10: pairML %.3g ms < multilateration %.3g ms < non-coop turboLS %.3g ms < "
               "coop turboLS %.3g ms",
               t_pm * 1e3, t_ml * 1e3, t_nc * 1e3, t_c * 1e3));
  }

  std::printf("%s: %d failing criteria, %.0f s\n", failures ? "FAILED" : "OK", failures, seconds_since(t_start));
  return failures ? 1 : 0;
}
