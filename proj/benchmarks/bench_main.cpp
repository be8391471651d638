// Wall-clock microbenchmarks for the hot kernels and the composed forwards.
// Complements the CLI's analytic cost report with measured times.

#include <benchmark/benchmark.h>

#include <cstdint>

#include "gestformer/blocks.hpp"
#include "gestformer/model.hpp"
#include "gestformer/rng.hpp"
#include "gestformer/tensor.hpp"
#include "gestformer/wavelet.hpp"

namespace {

using namespace gestformer;

Tensor random_tensor(Shape s, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t = Tensor::zeros(std::move(s));
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

void bm_matmul(benchmark::State& state) {
    const auto n = state.range(0);
    const Tensor a = random_tensor(Shape{n, n}, 1);
    const Tensor b = random_tensor(Shape{n, n}, 2);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * n * n * n);
}

void bm_dwt2(benchmark::State& state) {
    const auto n = state.range(0);
    const Tensor x = random_tensor(Shape{1, n, n}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(dwt2(x));
}

void bm_wavelet_round_trip(benchmark::State& state) {
    const auto n = state.range(0);
    const Tensor x = random_tensor(Shape{1, n, n}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(idwt2(dwt2(x)));
}

void bm_avg_pool(benchmark::State& state) {
    const Tensor x = random_tensor(Shape{1, state.range(0), state.range(0)}, 5);
    const int kernel = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(avg_pool2d(x, kernel));
}

void bm_wcp(benchmark::State& state) {
    const Tensor f = random_tensor(Shape{state.range(0), state.range(1)}, 6);
    Rng rng(7);
    WcpWeights w = WcpWeights::identity();
    for (auto& dc : w.dc) {
        for (double& v : dc.dw.data) v = rng.uniform(-0.5, 0.5);
        for (double& v : dc.pw.data) v = rng.uniform(-0.5, 0.5);
    }
    for (auto _ : state) benchmark::DoNotOptimize(wcp_forward(f, w));
}

void bm_msp(benchmark::State& state) {
    const Tensor f = random_tensor(Shape{state.range(0), state.range(1)}, 8);
    for (auto _ : state) benchmark::DoNotOptimize(msp_forward(f));
}

void bm_gdfn(benchmark::State& state) {
    const auto m = state.range(0);
    const auto k = state.range(1);
    const Tensor p = random_tensor(Shape{m, k}, 9);
    GdfnWeights w = GdfnWeights::zeros(k, 2);
    Rng rng(10);
    for (Tensor* t : {&w.p1_w, &w.d1_w, &w.p2_w, &w.d2_w, &w.p0_w}) {
        for (double& v : t->data) v = rng.uniform(-0.3, 0.3);
    }
    for (auto _ : state) benchmark::DoNotOptimize(gdfn_forward(p, w));
}

GestFormerModel toy_model() {
    ModelConfig cfg;
    cfg.m = 40;
    cfg.d_in = 16;
    cfg.k = 32;
    cfg.stages = 2;
    cfg.n = 3;
    cfg.r = 2;
    return init_weights(cfg, 11);
}

void bm_mwpt_stage(benchmark::State& state) {
    const GestFormerModel model = toy_model();
    const Tensor x = random_tensor(Shape{model.config.m, model.config.k}, 12);
    for (auto _ : state) benchmark::DoNotOptimize(mwpt_stage(x, model, 0));
}

void bm_model_forward(benchmark::State& state) {
    const GestFormerModel model = toy_model();
    const Tensor f = random_tensor(Shape{model.config.m, model.config.d_in}, 13);
    for (auto _ : state) benchmark::DoNotOptimize(model_forward(f, model));
}

BENCHMARK(bm_matmul)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(bm_dwt2)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(bm_wavelet_round_trip)->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(bm_avg_pool)->Args({64, 3})->Args({64, 5})->Args({64, 7});
BENCHMARK(bm_wcp)->Args({40, 32})->Args({80, 64});
BENCHMARK(bm_msp)->Args({40, 32})->Args({80, 64});
BENCHMARK(bm_gdfn)->Args({40, 32})->Args({80, 64});
BENCHMARK(bm_mwpt_stage);
BENCHMARK(bm_model_forward);

} // namespace

BENCHMARK_MAIN();
