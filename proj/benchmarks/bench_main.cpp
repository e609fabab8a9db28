#include "bcpo/baselines.hpp"
#include "bcpo/critic.hpp"
#include "bcpo/experiment.hpp"
#include "bcpo/gridworld.hpp"
#include "bcpo/policy_update.hpp"

#include <benchmark/benchmark.h>

namespace {

const bcpo::ExperimentData& gridworld_data() {
    static const bcpo::ExperimentData data = bcpo::prepare_experiment(bcpo::ExperimentConfig{});
    return data;
}

void BM_PessimisticCritic(benchmark::State& state) {
    const auto& data = gridworld_data();
    const bcpo::ExperimentConfig config;
    const bcpo::PessimisticOperator op(data.model, data.counts, config.grid.gamma,
                                       config.bcpo.transition_penalty_scale);
    const bcpo::TabularPolicy pi = bcpo::behavior_cloning(data.counts);
    for (auto _ : state) benchmark::DoNotOptimize(bcpo::solve_pessimistic_fixed_point(op, pi));
}
BENCHMARK(BM_PessimisticCritic)->Unit(benchmark::kMillisecond);

void BM_TrustRegionStep(benchmark::State& state) {
    const auto& data = gridworld_data();
    const bcpo::ExperimentConfig config;
    const bcpo::PessimisticOperator op(data.model, data.counts, config.grid.gamma,
                                       config.bcpo.transition_penalty_scale);
    const bcpo::TabularPolicy behavior = bcpo::floor_policy(bcpo::behavior_cloning(data.counts), 1e-12);
    const bcpo::PessimisticCritic critic = bcpo::solve_pessimistic_fixed_point(op, behavior);
    const Eigen::VectorXd nu = bcpo::state_marginal(data.counts);
    for (auto _ : state)
        benchmark::DoNotOptimize(bcpo::enforce_trust_region(critic.q_lcb, behavior, behavior, nu,
                                                            config.bcpo.alpha,
                                                            config.bcpo.trust_region_delta));
}
BENCHMARK(BM_TrustRegionStep)->Unit(benchmark::kMillisecond);

void BM_NaiveFqi(benchmark::State& state) {
    const auto& data = gridworld_data();
    for (auto _ : state)
        benchmark::DoNotOptimize(bcpo::naive_fqi(data.counts, data.model.empirical, 0.97,
                                                 static_cast<int>(state.range(0))));
}
BENCHMARK(BM_NaiveFqi)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_GenerateDataset(benchmark::State& state) {
    const bcpo::GridSpec spec;
    const bcpo::TabularMDP mdp = bcpo::build_mdp(spec);
    const bcpo::TabularPolicy b = bcpo::make_behavior_policy(mdp, spec, 0.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(bcpo::generate_dataset(mdp, spec, b, state.range(0), 200, 0));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateDataset)->Arg(15'000)->Unit(benchmark::kMillisecond);

void BM_Rollout(benchmark::State& state) {
    const bcpo::GridSpec spec;
    const bcpo::TabularMDP mdp = bcpo::build_mdp(spec);
    const bcpo::TabularPolicy b = bcpo::make_behavior_policy(mdp, spec, 0.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(bcpo::rollout_evaluate(mdp, spec, b, 1000, 200, 12345));
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMillisecond);

void BM_FullExperiment(benchmark::State& state) {
    const bcpo::ExperimentConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(bcpo::compute_experiment(config));
}
BENCHMARK(BM_FullExperiment)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
