#include <benchmark/benchmark.h>

#include "miloc/channel.hpp"
#include "miloc/config.hpp"
#include "miloc/crlb.hpp"
#include "miloc/estimators.hpp"
#include "miloc/pair_ml.hpp"
#include "miloc/random.hpp"
#include "miloc/scenario.hpp"

namespace {

using namespace miloc;

struct Setup {
  ExperimentConfig cfg;
  CouplingTable coupling;
  Topology top;
  MeasurementSet meas;
  LsProblem prob;
};

Setup make_setup(std::size_t agents, Scheme scheme, std::uint64_t seed = 7) {
  ExperimentConfig cfg;
  cfg.resistance_ohm = 0.0528;
  const auto coupling = cfg.coupling();
  Rng rng(seed);
  auto top = sample_topology(agents, cfg.room(), cfg.anchors(), cfg.min_dist(), rng);
  auto meas = synthesize_measurements(top, coupling, scheme, cfg.sigma, rng);
  auto prob = make_problem(top, meas, coupling);
  return {cfg, coupling, std::move(top), std::move(meas), std::move(prob)};
}

void BM_ChannelJacobian(benchmark::State& state) {
  const auto s = make_setup(2, Scheme::Cooperative);
  const double c = s.coupling(0, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(channel_jacobian(s.top.agents[0], s.top.agents[1], c));
  }
}
BENCHMARK(BM_ChannelJacobian);

void BM_PairMlLink(benchmark::State& state) {
  const auto s = make_setup(1, Scheme::NonCooperative);
  const auto& link = s.meas.links.front();
  const auto& anchor = s.top.anchors[link.rx - 1];
  const double c = s.coupling(link.tx, link.rx);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_link(link, anchor, c, s.top.room));
  }
}
BENCHMARK(BM_PairMlLink);

void BM_CoopSolve(benchmark::State& state) {
  const auto s = make_setup(static_cast<std::size_t>(state.range(0)), Scheme::Cooperative);
  const auto init = pack(pair_ml_all(s.prob, s.top.room));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_from(init, s.prob));
  }
}
BENCHMARK(BM_CoopSolve)->Arg(2)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FimAndPeb(benchmark::State& state) {
  const auto s = make_setup(static_cast<std::size_t>(state.range(0)), Scheme::Cooperative);
  for (auto _ : state) {
    const auto fim = assemble_fim(s.top.agents, s.top.anchors, s.coupling, s.cfg.sigma, Scheme::Cooperative);
    benchmark::DoNotOptimize(peb(fim, 0));
  }
}
BENCHMARK(BM_FimAndPeb)->Arg(1)->Arg(5)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
