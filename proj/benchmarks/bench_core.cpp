/* Microbenchmarks for the hot paths: sequence enumeration, policy sampling,
 * log-prob gradients, exact normalization and the batch estimators. Sizes
 * mirror the catalog tasks (V=4, L=6..8).
 */

#include <benchmark/benchmark.h>

#include "dpglab/ebm.hpp"
#include "dpglab/estimators.hpp"
#include "dpglab/oracle.hpp"
#include "dpglab/policy.hpp"
#include "dpglab/rng.hpp"
#include "dpglab/seqspace.hpp"
#include "dpglab/task.hpp"

namespace {

using namespace dpglab;

void bm_enumerate(benchmark::State& state) {
  const VocabSpec space{4, static_cast<int>(state.range(0))};
  for (auto _ : state) {
    std::uint64_t acc = 0;
    for_each_sequence(space, [&](std::uint64_t rank, const Sequence& seq) {
      acc += rank + static_cast<std::uint64_t>(seq.back());
    });
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(space.sequence_count()));
}
BENCHMARK(bm_enumerate)->Arg(6)->Arg(8);

void bm_sample(benchmark::State& state) {
  const VocabSpec space{4, 8};
  const TabularPolicy policy = TabularPolicy::randomized(space, 11);
  auto rng = rng::stream_rng(0, rng::Domain::bench, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.sample(rng));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(bm_sample);

void bm_log_prob_and_grad(benchmark::State& state) {
  const VocabSpec space{4, 8};
  const TabularPolicy policy = TabularPolicy::randomized(space, 11);
  auto rng = rng::stream_rng(0, rng::Domain::bench, 1);
  const Sequence x = policy.sample(rng);
  SparseGrad grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.log_prob_and_grad(x, grad));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(bm_log_prob_and_grad);

void bm_exact_distribution(benchmark::State& state) {
  const VocabSpec space{4, static_cast<int>(state.range(0))};
  const TabularPolicy policy = TabularPolicy::randomized(space, 11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policy.exact_distribution());
  }
}
BENCHMARK(bm_exact_distribution)->Arg(6)->Arg(8);

void bm_normalize_ebm(benchmark::State& state) {
  const Task task = catalog_task("single_marker");
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle::normalize_ebm(task.ebm));
  }
}
BENCHMARK(bm_normalize_ebm);

void bm_reinforce_batch(benchmark::State& state) {
  const Task task = catalog_task("frequent_word");
  const TabularPolicy policy = TabularPolicy::randomized(task.space(), 11);
  const RewardSpec reward = RewardSpec::feature_indicator(task.rm_reward_feature());
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t base = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        reinforce_batch(policy, reward, BaselineKind::mean_reward, n, 0, base));
    base += n;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(bm_reinforce_batch)->Arg(64)->Arg(256);

void bm_dpg_off_batch(benchmark::State& state) {
  Task task = catalog_task("single_marker");
  task.ebm.lambdas[0] = 1.0986122886681098;
  const TabularPolicy policy = TabularPolicy::randomized(task.space(), 11);
  const TabularPolicy proposal = TabularPolicy::randomized(task.space(), 12);
  const double z = oracle::normalize_ebm(task.ebm).second;
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t base = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dpg_off_batch(policy, proposal, task.ebm, z, true, n, 0, base));
    base += n;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(bm_dpg_off_batch)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
