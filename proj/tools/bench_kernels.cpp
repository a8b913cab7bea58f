// Serial vs OpenMP kernels: GEMM and whole-dataset scoring.

#include <benchmark/benchmark.h>

#include <vector>

#include "tcas/kernels.hpp"
#include "tcas/model.hpp"
#include "tcas/rng.hpp"
#include "tcas/scoring.hpp"

namespace {

using tcas::Rng;
namespace kernels = tcas::kernels;

struct GemmInputs {
  kernels::GemmDims dims;
  std::vector<double> a, b, c;

  explicit GemmInputs(std::size_t n) : dims{n, n, n}, a(n * n), b(n * n), c(n * n) {
    Rng rng(1);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal();
  }
};

void BM_GemmSerial(benchmark::State& state) {
  GemmInputs in(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    kernels::serial::gemm_nn(in.a, in.b, in.c, in.dims);
    benchmark::DoNotOptimize(in.c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0) * state.range(0) * state.range(0));
}

void BM_GemmParallel(benchmark::State& state) {
  GemmInputs in(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    kernels::parallel::gemm_nn(in.a, in.b, in.c, in.dims);
    benchmark::DoNotOptimize(in.c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0) * state.range(0) * state.range(0));
}

struct ScoringInputs {
  tcas::model::ModelParams params;
  tcas::train::Dataset data;

  ScoringInputs() {
    tcas::model::ModelConfig cfg;
    cfg.c_in = 64;
    cfg.hidden = 64;
    cfg.channels = 32;
    cfg.t_target = 100;
    Rng init(2);
    params = tcas::model::ModelParams(cfg, init);
    Rng rng(3);
    for (std::size_t i = 0; i < 64; ++i) {
      tcas::nd::Tensor x({cfg.t_target, cfg.c_in});
      for (auto& v : x.data()) v = rng.normal();
      data.entries.push_back({"u" + std::to_string(i), "u.feat", tcas::feat::Label::bonafide, "-"});
      data.frames.push_back(std::move(x));
      data.targets.push_back(0);
    }
  }
};

void BM_ScoreSerial(benchmark::State& state) {
  ScoringInputs in;
  for (auto _ : state) benchmark::DoNotOptimize(tcas::train::serial::score_dataset(in.params, in.data));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(in.data.size()));
}

void BM_ScoreParallel(benchmark::State& state) {
  ScoringInputs in;
  for (auto _ : state) benchmark::DoNotOptimize(tcas::train::score_dataset(in.params, in.data));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(in.data.size()));
}

}  // namespace

BENCHMARK(BM_GemmSerial)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GemmParallel)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
