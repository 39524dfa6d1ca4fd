#pragma once

#include "fastdvd/model.hpp"
#include "fastdvd/rng.hpp"
#include "fastdvd/tensor.hpp"

#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace fastdvd {

// Ordered RGB frames as (1, 3, h, w) tensors with values in [0,1].
struct FrameSequence {
    std::vector<Tensor> frames;
    double fps = 0.0;    // informational
    std::string source;  // informational

    int count() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().h(); }
    int width() const { return frames.empty() ? 0 : frames.front().w(); }
};

// Additive white Gaussian noise description. sigma lives on the 0-255
// scale of 8-bit pixels and is divided by 255 internally.
struct NoiseSpec {
    float sigma = 0.0f;
    bool clipped = false;
    std::uint64_t seed = 0;
};

// Single 8-bit RGB PNG <-> float tensor. Loading maps v to v/255; saving
// rounds v*255 to nearest and clamps to [0,255].
Tensor load_png(const std::string& path);
void save_png(const Tensor& frame, const std::string& path);

// Directory of PNG frames ordered by filename (zero-padded numeric names
// sort correctly). save_sequence writes %05d.png.
FrameSequence load_sequence(const std::string& dir);
void save_sequence(const FrameSequence& seq, const std::string& dir);

// Independent N(0, (sigma/255)^2) samples added per pixel per channel per
// frame. Each frame draws from its own stream derived from spec.seed, so
// results do not depend on processing order. sigma == 0 returns the input
// unchanged; clipped clamps to [0,1].
FrameSequence add_awgn(const FrameSequence& seq, const NoiseSpec& spec);

// Constant plane of value sigma/255, dims (n, 1, h, w).
Tensor build_noise_map(float sigma, int h, int w, int n = 1);

// Reflects an arbitrary index into [0, n): -k maps to k, n-1+k to n-1-k,
// repeating for small n. n == 1 always gives 0.
long reflect_index(long i, long n);

// The temporal window [t-2 .. t+2] with boundary reflection.
std::array<long, 5> window_indices(long t, long n_frames);

struct PaddedFrame {
    Tensor frame;
    int orig_h = 0;
    int orig_w = 0;
};

// Reflect-pads right/bottom to the next multiple of `multiple`.
PaddedFrame pad_to_multiple(const Tensor& x, int multiple = 4);

// Top-left crop back to (h, w); exact inverse of pad_to_multiple.
Tensor crop_topleft(const Tensor& x, int h, int w);

// Bilinear resampling with half-pixel-centered sampling, used by the
// training-time rescaling augmentation.
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);

// Cache of first-stage outputs keyed by the conceptual triplet-center
// index. Consecutive windows overlap in two of their three triplets, so a
// capacity of 3 makes the steady state one new first-stage evaluation per
// frame.
class StreamState {
public:
    explicit StreamState(std::size_t capacity = 3) : capacity_(capacity) {}

    const Tensor* find(long center) const {
        for (const auto& e : entries_) {
            if (e.center == center) return &e.value;
        }
        return nullptr;
    }

    void insert(long center, Tensor value) {
        entries_.push_back(Entry{center, std::move(value)});
        while (entries_.size() > capacity_) entries_.pop_front();
    }

    std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        long center;
        Tensor value;
    };
    std::deque<Entry> entries_;
    std::size_t capacity_;
};

struct PipelineStats {
    long block1_evals = 0;
    long block2_evals = 0;
    long cache_hits = 0;
    std::vector<double> frame_seconds;
};

struct DenoiseResult {
    FrameSequence frames;
    PipelineStats stats;
};

// Denoises every frame: gather the 5-frame window, pad, run the model in
// eval mode, crop. With streaming set (cascade variant), first-stage
// outputs are memoized in a StreamState; the output is bit-identical to the
// naive pass either way.
DenoiseResult denoise_sequence(const FrameSequence& noisy, float sigma, ModelWeights& weights,
                               bool streaming);

} // namespace fastdvd
