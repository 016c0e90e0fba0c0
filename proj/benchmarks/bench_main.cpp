#include <benchmark/benchmark.h>

#include "cvgeo/data.hpp"
#include "cvgeo/fft.hpp"
#include "cvgeo/mining.hpp"
#include "cvgeo/model.hpp"

using namespace cvgeo;

namespace {

ModelDims bench_dims() {
    ModelDims d;
    d.h_s = 8;
    d.w_s = 16;
    d.h_a = 16;
    d.c = 8;
    d.c1 = 32;
    d.k = 64;
    return d;
}

void BM_Forward(benchmark::State& state) {
    ModelDims d = bench_dims();
    ModelParams p = init_params(d, 1);
    Rng rng(2);
    Tensor3 t(d.h_s, d.w_s, d.c);
    for (auto& v : t.data) v = rng.normal();
    for (auto _ : state)
        benchmark::DoNotOptimize(forward(p, View::street, t).embedding);
}
BENCHMARK(BM_Forward);

void BM_Backward(benchmark::State& state) {
    ModelDims d = bench_dims();
    ModelParams p = init_params(d, 1);
    Rng rng(3);
    Tensor3 t(d.h_s, d.w_s, d.c);
    for (auto& v : t.data) v = rng.normal();
    ForwardTrace tr = forward(p, View::street, t);
    Vec g(d.k, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(backward(p, tr, g).grads.w2);
}
BENCHMARK(BM_Backward);

void BM_Dft(benchmark::State& state) {
    Rng rng(4);
    std::vector<double> x(state.range(0));
    for (auto& v : x) v = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(dft(x).values);
}
BENCHMARK(BM_Dft)->Arg(256)->Arg(360)->Arg(361);

void BM_PoolScan(benchmark::State& state) {
    const int k = 64;
    Rng rng(5);
    MiningPool pool(state.range(0));
    for (long i = 0; i < state.range(0); ++i) {
        Vec v(k);
        for (auto& x : v) x = rng.normal();
        pool.push(View::aerial, "p" + std::to_string(i), l2_normalize(v), i);
    }
    Vec anchor(k);
    for (auto& x : anchor) x = rng.normal();
    anchor = l2_normalize(anchor);
    for (auto _ : state) {
        Rng pick(7);
        benchmark::DoNotOptimize(
            pool.hardest_negatives(View::aerial, anchor, "none", 5, pick));
    }
}
BENCHMARK(BM_PoolScan)->Arg(100)->Arg(1000);

void BM_RotateAerial(benchmark::State& state) {
    Rng rng(6);
    Tensor3 t(32, 32, 8);
    for (auto& v : t.data) v = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(rotate_aerial(t, 37.0).data);
}
BENCHMARK(BM_RotateAerial);

}  // namespace

BENCHMARK_MAIN();
