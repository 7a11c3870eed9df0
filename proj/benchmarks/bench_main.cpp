#include <benchmark/benchmark.h>

#include "synergy/harness.hpp"
#include "synergy/personalizer.hpp"
#include "synergy/plant.hpp"
#include "synergy/sysid.hpp"

namespace {

using namespace synergy;

void BM_GreyBoxEpisode(benchmark::State& state) {
  ExperimentConfig c;
  c.iterations = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(c, seed++));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GreyBoxEpisode)->Arg(150)->Arg(1000);

void BM_PersonalizerStep(benchmark::State& state) {
  Personalizer p(PersonalizerConfig{});
  double J = 100.0;
  for (auto _ : state) {
    J = 100.0 + 0.01 * p.step(J);
    benchmark::DoNotOptimize(J);
  }
}
BENCHMARK(BM_PersonalizerStep);

void BM_FitLti(benchmark::State& state) {
  auto spec = reference_subject_b();
  SimulatedSubject subj(spec);
  std::vector<double> u;
  std::vector<double> y;
  for (long i = 0; i < kSweepLength; ++i) {
    u.push_back(eval_preference(spec.map, sweep_theta(i)));
    y.push_back(subj.step(sweep_theta(i)));
  }
  LtiFitOptions o;
  o.order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_adaptation_lti(u, y, o));
}
BENCHMARK(BM_FitLti)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SimulateReach(benchmark::State& state) {
  double theta = 0.8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_reach({}, {}, theta, {}));
    theta = theta >= 2.4 ? 0.8 : theta + 0.01;
  }
}
BENCHMARK(BM_SimulateReach);

}  // namespace
BENCHMARK_MAIN();
