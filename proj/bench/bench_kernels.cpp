#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vgnmn/corpus.hpp"
#include "vgnmn/kernels.hpp"
#include "vgnmn/training.hpp"

using namespace vgnmn;

namespace {

std::vector<double> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

template <auto Kernel>
void gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_buffer(n * n, 1), b = random_buffer(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(n, n, n, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

void training_batch(benchmark::State& state) {
  const auto corpus = generate_corpus(WorldSpec{}, 40, 1);
  TrainConfig config;
  Model model(config.model, corpus.vocab, 1);
  std::vector<const DialogueSample*> batch;
  for (const auto& s : corpus.split("train"))
    if (batch.size() < 32) batch.push_back(&s);
  std::size_t step = 1;
  for (auto _ : state) {
    auto r = batch_gradient(model, batch, corpus, config.loss, true, 0, step++, static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(r.loss.total);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch.size()));
}

}  // namespace

BENCHMARK(gemm<kernels::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(gemm<kernels::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Arg(64)->Arg(128)->Arg(256)->UseRealTime();
BENCHMARK(gemm<kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(128);
BENCHMARK(gemm<kernels::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(128)->UseRealTime();
BENCHMARK(gemm<kernels::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(128);
BENCHMARK(gemm<kernels::parallel::gemm_tn>)->Name("gemm_tn/parallel")->Arg(128)->UseRealTime();
BENCHMARK(training_batch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
