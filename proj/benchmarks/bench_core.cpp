#include <benchmark/benchmark.h>

#include "cft/channel.hpp"
#include "cft/mobility.hpp"
#include "cft/protocol.hpp"
#include "cft/simulator.hpp"

using namespace cft;

static void BM_UpperGamma(benchmark::State& state) {
  double z = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(regularized_upper_gamma(0.74, z));
    z = z < 50.0 ? z * 1.1 : 0.1;
  }
}
BENCHMARK(BM_UpperGamma);

static void BM_RateDistribution(benchmark::State& state) {
  const auto cfg = default_experiment();
  double d = 50.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rate_distribution(d, cfg.channel, cfg.rates));
    d = d < 600.0 ? d + 1.7 : 50.0;
  }
}
BENCHMARK(BM_RateDistribution);

static void BM_RateCurveBuild(benchmark::State& state) {
  const auto cfg = default_experiment();
  for (auto _ : state) benchmark::DoNotOptimize(RateCurve(cfg.channel, cfg.rates, static_cast<double>(state.range(0))));
}
BENCHMARK(BM_RateCurveBuild)->Arg(250)->Arg(600)->Unit(benchmark::kMillisecond);

static void BM_MobilityStep(benchmark::State& state) {
  auto cfg = default_experiment();
  cfg.mobility.density = static_cast<double>(state.range(0)) * 1e-3;
  Rng rng(7);
  auto fleet = init_scenario(cfg.mobility, rng);
  for (auto _ : state) step(fleet, cfg.mobility, rng);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fleet.size()));
}
BENCHMARK(BM_MobilityStep)->Arg(5)->Arg(10);

static void BM_RunCft(benchmark::State& state) {
  auto cfg = default_experiment();
  const double rho = 10e-3, range = 250.0;
  const auto snaps = scenario_snapshots(cfg, rho, 3);
  RequestScenario rs;
  for (int k = 0; !rs.valid; ++k) rs = request_scenario(cfg, snaps[0], rho, range, 3, k);
  const auto models = cfg.models_at(rho, range);
  const auto& fleet = rs.trajectory.front();
  const FileSpec file{state.range(0) * 125000, 125000};
  for (auto _ : state)
    benchmark::DoNotOptimize(run_cft(fleet[rs.request], fleet, {rs.holder}, file, models));
}
BENCHMARK(BM_RunCft)->Arg(50)->Arg(200)->Arg(500)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
