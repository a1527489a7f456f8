// Parallel kernels vs. the straight-line reference, plus the FFT against the
// naive DFT. Run with --benchmark_filter=conv to narrow down.

#include <complex>
#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "hivesig/dsp.hpp"
#include "hivesig/kernels.hpp"
#include "hivesig/ref_kernels.hpp"
#include "hivesig/rng.hpp"
#include "hivesig/tensor.hpp"

using namespace hivesig;

namespace {

Tensor<float> rand_tensor(std::vector<int> shape, uint64_t seed) {
    Tensor<float> t(std::move(shape));
    Rng rng(seed);
    for (float& v : t.data) v = static_cast<float>(2.0 * rng.uniform() - 1.0);
    return t;
}

// teacher mid-tower shape: 64 channels on a 16x16 map
constexpr int kN = 8, kCin = 64, kCout = 64, kSide = 16, kK = 3;

void conv_inputs(Tensor<float>& x, Tensor<float>& w, Tensor<float>& b) {
    x = rand_tensor({kN, kCin, kSide, kSide}, 1);
    w = rand_tensor({kCout, kCin, kK, kK}, 2);
    b = rand_tensor({kCout}, 3);
}

void BM_conv2d_parallel(benchmark::State& state) {
    Tensor<float> x, w, b, y;
    conv_inputs(x, w, b);
    for (auto _ : state) {
        kernels::conv2d_forward(x, w, b, 1, 1, y);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(kN) * kCout * kSide * kSide * kCin * kK * kK);
}

void BM_conv2d_reference(benchmark::State& state) {
    Tensor<float> x, w, b;
    conv_inputs(x, w, b);
    std::vector<float> y(size_t(kN) * kCout * kSide * kSide);
    for (auto _ : state) {
        refk::conv2d(x.data.data(), kN, kCin, kSide, kSide, w.data.data(), kCout, kK, kK, 1, 1,
                     b.data.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(kN) * kCout * kSide * kSide * kCin * kK * kK);
}

constexpr int kBatch = 32, kIn = 4096, kOut = 64;

void BM_dense_parallel(benchmark::State& state) {
    const Tensor<float> x = rand_tensor({kBatch, kIn}, 4);
    const Tensor<float> w = rand_tensor({kOut, kIn}, 5);
    const Tensor<float> b = rand_tensor({kOut}, 6);
    Tensor<float> y;
    for (auto _ : state) {
        kernels::dense_forward(x, w, b, y);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(kBatch) * kIn * kOut);
}

void BM_dense_reference(benchmark::State& state) {
    const Tensor<float> x = rand_tensor({kBatch, kIn}, 4);
    const Tensor<float> w = rand_tensor({kOut, kIn}, 5);
    const Tensor<float> b = rand_tensor({kOut}, 6);
    std::vector<float> y(size_t(kBatch) * kOut);
    for (auto _ : state) {
        refk::dense(x.data.data(), kBatch, kIn, w.data.data(), kOut, b.data.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * int64_t(kBatch) * kIn * kOut);
}

void BM_maxpool_parallel(benchmark::State& state) {
    const Tensor<float> x = rand_tensor({kN, kCin, 32, 32}, 7);
    Tensor<float> y;
    std::vector<int64_t> argmax;
    for (auto _ : state) {
        kernels::maxpool_forward(x, 2, y, argmax);
        benchmark::DoNotOptimize(y.data.data());
    }
}

void BM_maxpool_reference(benchmark::State& state) {
    const Tensor<float> x = rand_tensor({kN, kCin, 32, 32}, 7);
    std::vector<float> y(size_t(kN) * kCin * 16 * 16);
    for (auto _ : state) {
        refk::maxpool(x.data.data(), kN, kCin, 32, 32, 2, y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_fft(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(8);
    std::vector<std::complex<double>> x(static_cast<size_t>(n));
    for (auto& v : x) v = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
    for (auto _ : state) {
        auto y = dsp::fft(x);
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_dft_reference(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(8);
    std::vector<std::complex<double>> x(static_cast<size_t>(n));
    for (auto& v : x) v = {2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
    for (auto _ : state) {
        auto y = refk::naive_dft(x);
        benchmark::DoNotOptimize(y.data());
    }
}

BENCHMARK(BM_conv2d_parallel);
BENCHMARK(BM_conv2d_reference);
BENCHMARK(BM_dense_parallel);
BENCHMARK(BM_dense_reference);
BENCHMARK(BM_maxpool_parallel);
BENCHMARK(BM_maxpool_reference);
BENCHMARK(BM_fft)->Arg(1024)->Arg(4096);
BENCHMARK(BM_dft_reference)->Arg(1024)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
