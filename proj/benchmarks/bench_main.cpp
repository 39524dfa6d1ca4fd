#include <benchmark/benchmark.h>

#include "fastdvd/kernels.hpp"
#include "fastdvd/model.hpp"
#include "fastdvd/rng.hpp"
#include "fastdvd/video.hpp"

#include <span>
#include <vector>

using namespace fastdvd;

namespace {

Tensor random_tensor(const Dims& d, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(d);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<float>(rng.next_double());
    }
    return t;
}

void BM_conv2d(benchmark::State& state) {
    const int channels = static_cast<int>(state.range(0));
    const int side = static_cast<int>(state.range(1));
    Tensor x = random_tensor(Dims{1, channels, side, side}, 1);
    Tensor k = random_tensor(Dims{channels, channels, 3, 3}, 2);
    std::vector<float> bias(static_cast<std::size_t>(channels), 0.1f);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d(x, k, std::span<const float>(bias), 1, 1));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()) * channels *
                            9);
}

void BM_den_block(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    auto weights = init_weights<float>(Variant::cascade, 3);
    std::vector<Tensor> frames;
    for (int i = 0; i < 3; ++i) {
        frames.push_back(random_tensor(Dims{1, 3, side, side}, 10 + i));
    }
    Tensor map = build_noise_map(25.0f, side, side);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            den_block_forward(weights.block1, std::span<const Tensor>(frames), map));
    }
}

void BM_frame_naive(benchmark::State& state) {
    auto weights = init_weights<float>(Variant::cascade, 4);
    FrameSequence seq;
    for (int i = 0; i < 8; ++i) {
        seq.frames.push_back(random_tensor(Dims{1, 3, 240, 136}, 20 + i));
    }
    for (auto _ : state) {
        DenoiseResult r = denoise_sequence(seq, 25.0f, weights, false);
        benchmark::DoNotOptimize(r.frames.frames[0][0]);
    }
    state.SetItemsProcessed(state.iterations() * 8);
}

void BM_frame_streaming(benchmark::State& state) {
    auto weights = init_weights<float>(Variant::cascade, 4);
    FrameSequence seq;
    for (int i = 0; i < 8; ++i) {
        seq.frames.push_back(random_tensor(Dims{1, 3, 240, 136}, 20 + i));
    }
    for (auto _ : state) {
        DenoiseResult r = denoise_sequence(seq, 25.0f, weights, true);
        benchmark::DoNotOptimize(r.frames.frames[0][0]);
    }
    state.SetItemsProcessed(state.iterations() * 8);
}

} // namespace

BENCHMARK(BM_conv2d)->Args({32, 64})->Args({64, 64})->Args({128, 32});
BENCHMARK(BM_den_block)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_frame_naive)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_frame_streaming)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
