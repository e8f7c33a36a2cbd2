// Microbenchmarks for the numeric hot paths: matmul, block quantisation,
// dequantisation, the adapter forward/backward pair, and one full
// adaptation training step.

#include <benchmark/benchmark.h>

#include "pqm/lora.hpp"
#include "pqm/model.hpp"
#include "pqm/nf4.hpp"
#include "pqm/speakers.hpp"

using namespace pqm;

namespace {

Matrix random_matrix(int r, int c, uint64_t seed) {
    Matrix m(r, c);
    Rng rng(seed);
    gaussian_fill(m, 0.0f, 1.0f, rng);
    return m;
}

void bm_matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Matrix a = random_matrix(n, n, 1);
    Matrix b = random_matrix(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n * n);
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(128)->Arg(320);

void bm_quantise_matrix(benchmark::State& state) {
    auto cb = build_codebook(4);
    const int n = static_cast<int>(state.range(0));
    Matrix m = random_matrix(n, n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(quantise_matrix(m, 64, cb));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n);
}
BENCHMARK(bm_quantise_matrix)->Arg(128)->Arg(512);

void bm_dequantise(benchmark::State& state) {
    auto cb = build_codebook(4);
    const int n = static_cast<int>(state.range(0));
    auto q = quantise_matrix(random_matrix(n, n, 4), 64, cb);
    for (auto _ : state) benchmark::DoNotOptimize(dequantise(q, cb));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n) * n);
}
BENCHMARK(bm_dequantise)->Arg(128)->Arg(512);

void bm_lora_forward(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Matrix w0 = random_matrix(d, d, 5);
    Rng rng(6);
    auto ad = init_adapter(d, d, 4, 4.0f, rng);
    gaussian_fill(ad.b, 0.0f, 0.1f, rng);
    Matrix x = random_matrix(d, 32, 7);
    for (auto _ : state) benchmark::DoNotOptimize(lora_forward(w0, ad, x));
}
BENCHMARK(bm_lora_forward)->Arg(128)->Arg(320);

void bm_lora_backward(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Matrix w0 = random_matrix(d, d, 8);
    Rng rng(9);
    auto ad = init_adapter(d, d, 4, 4.0f, rng);
    gaussian_fill(ad.b, 0.0f, 0.1f, rng);
    Matrix x = random_matrix(d, 32, 10);
    Matrix gy = random_matrix(d, 32, 11);
    for (auto _ : state) benchmark::DoNotOptimize(lora_backward(w0, ad, x, gy));
}
BENCHMARK(bm_lora_backward)->Arg(128)->Arg(320);

void bm_adapt_step(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    auto cb = build_codebook(4);
    ToyModel model = build_model(d, 1);
    QuantSelection all;
    all.linear = all.conv = all.embed = true;
    ToyModel q = quantise_model(model, all, 64, cb);
    auto ds = generate_dataset(identity_profile("bench"), 40, 1);
    auto train_set = ds.subset(ds.train);
    TrainConfig cfg;
    cfg.steps = 1;
    cfg.batch_size = 8;
    for (auto _ : state) {
        AdapterSet ads = init_adapters(q, 4, 4.0f, 2, "bench");
        benchmark::DoNotOptimize(train(q, &ads, train_set, {}, cfg, cb));
    }
}
BENCHMARK(bm_adapt_step)->Arg(32)->Arg(320)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
