// Serial reference vs OpenMP for each batch kernel.
//   citepref_bench --benchmark_filter=Laplace

#include <benchmark/benchmark.h>

#include "citepref/fit/glmm.hpp"
#include "citepref/fit/laplace.hpp"
#include "support/generators.hpp"
#include "support/sim_outcomes.hpp"

using namespace citepref;

namespace {

const fit::FitData& laplace_data(int scenarios) {
  static std::map<int, fit::FitData> cache;
  auto it = cache.find(scenarios);
  if (it == cache.end()) {
    const auto trials = gen::glmm_data(1, scenarios, 15, {1.0, 0.5, 0.5, 0.3});
    it = cache.emplace(scenarios, fit::FitData::build(trials, true)).first;
  }
  return it->second;
}

void BM_LaplaceSerial(benchmark::State& state) {
  const auto& data = laplace_data(static_cast<int>(state.range(0)));
  const fit::ModelParams p{1.0, 0.5, 0.5, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(fit::scenario_contributions_serial(data, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LaplaceOpenMP(benchmark::State& state) {
  const auto& data = laplace_data(static_cast<int>(state.range(0)));
  const fit::ModelParams p{1.0, 0.5, 0.5, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(fit::scenario_contributions_openmp(data, p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_LaplaceSerial)->Arg(80)->Arg(1440);
BENCHMARK(BM_LaplaceOpenMP)->Arg(80)->Arg(1440);

struct SimInputs {
  Corpus corpus;
  TrialPlan plan;
  std::vector<TrialContext> contexts;
  std::vector<MessageSequence> messages;
  std::vector<RawTrialResult> raws;
  SimConfig sim;
};

const SimInputs& sim_inputs() {
  static const SimInputs in = [] {
    SimInputs s;
    s.corpus = synth_corpus(SynthConfig{all_factor_ids(), 20}, 3);
    s.plan = build_plan(s.corpus, {"m1", "m2"}, 5, 3);
    s.sim.seed = 3;
    s.sim.gamma0 = 0.5;
    for (const auto& t : s.plan.trials) {
      s.contexts.push_back({t, s.corpus.at(t.scenario_id).factor_id});
      s.messages.push_back(build_messages(t, s.corpus));
    }
    const auto answers = simulate_answers_serial(s.contexts, s.messages, s.sim);
    for (std::size_t i = 0; i < answers.size(); ++i) s.raws.push_back({s.plan.trials[i].trial_id, answers[i], 1, {}, ""});
    return s;
  }();
  return in;
}

void BM_SimulateSerial(benchmark::State& state) {
  const auto& in = sim_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_answers_serial(in.contexts, in.messages, in.sim));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.contexts.size()));
}

void BM_SimulateOpenMP(benchmark::State& state) {
  const auto& in = sim_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(simulate_answers_openmp(in.contexts, in.messages, in.sim));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.contexts.size()));
}

BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateOpenMP)->Unit(benchmark::kMillisecond);

void BM_ExtractSerial(benchmark::State& state) {
  const auto& in = sim_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(extract_outcomes_serial(in.raws, in.plan.trials, in.corpus));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.raws.size()));
}

void BM_ExtractOpenMP(benchmark::State& state) {
  const auto& in = sim_inputs();
  for (auto _ : state) benchmark::DoNotOptimize(extract_outcomes_openmp(in.raws, in.plan.trials, in.corpus));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.raws.size()));
}

BENCHMARK(BM_ExtractSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractOpenMP)->Unit(benchmark::kMillisecond);

const std::vector<Outcome>& fit_outcomes() {
  static const std::vector<Outcome> out = [] {
    SimConfig sim;
    sim.seed = 8;
    sim.gamma1 = 0.5;
    sim.sigma_s = 0.3;
    return gen::simulated_outcomes(synth_corpus(SynthConfig{all_factor_ids(), 8}, 8), {"m1", "m2"}, 5, sim, 8);
  }();
  return out;
}

void BM_FitAllSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fit::fit_all_serial(fit_outcomes(), fit::AnalysisConfig{}));
}

void BM_FitAllOpenMP(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fit::fit_all_openmp(fit_outcomes(), fit::AnalysisConfig{}));
}

BENCHMARK(BM_FitAllSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitAllOpenMP)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
