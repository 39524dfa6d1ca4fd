#pragma once

#include "fastdvd/model.hpp"
#include "fastdvd/rng.hpp"
#include "fastdvd/tensor.hpp"
#include "fastdvd/video.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace fastdvd {

struct AugmentConfig {
    bool flips = true;
    std::vector<float> scale_factors{0.9f, 1.0f, 1.1f};
};

// Defaults follow the reference recipe: 96x96 patches over a 5-frame span,
// sigma drawn from [5,50], 80 epochs of batch-96 ADAM at 1e-3/1e-4/1e-6,
// kernel orthogonalization through epoch 59, 384k samples.
struct TrainConfig {
    int patch_size = 96;
    int temporal_span = 5;
    float sigma_low = 5.0f;
    float sigma_high = 50.0f;
    int epochs = 80;
    int batch_size = 96;
    std::vector<std::pair<int, double>> lr_schedule{{0, 1e-3}, {50, 1e-4}, {60, 1e-6}};
    int ortho_epochs = 60;
    long sample_count = 384000;
    AugmentConfig augmentation;
    std::uint64_t seed = 0;
};

// Throws ConfigError on out-of-range fields.
void validate(const TrainConfig& cfg);

struct TrainingSample {
    std::vector<Tensor> noisy; // temporal_span patches (1,3,p,p), same crop
    Tensor noise_map;          // (1,1,p,p), constant sigma/255
    Tensor clean;              // clean patch under the central noisy one
};

// Mirrors every patch of the sample with one pixel permutation.
void flip_sample(TrainingSample& s, bool horizontal, bool vertical);

// Draws horizontal/vertical flips with probability 1/2 each and applies them.
void augment(TrainingSample& s, Rng& rng, const AugmentConfig& cfg);

using Dataset = std::vector<FrameSequence>;

// Loads each subdirectory of `dir` as one PNG sequence, in name order.
Dataset load_dataset(const std::string& dir);

// Draws spatio-temporal training samples: a random (sequence, scale factor)
// source, a random center frame and crop, sigma uniform in [low, high], and
// fresh per-pixel noise. sample(k) depends only on (cfg.seed, k), so the
// stream is identical no matter what order or concurrency requests it.
class PatchSampler {
public:
    PatchSampler(const Dataset& data, const TrainConfig& cfg);

    TrainingSample sample(std::uint64_t index) const;

    long source_count() const { return static_cast<long>(sources_.size()); }
    const std::vector<std::string>& skipped() const { return skipped_; }

private:
    struct Source {
        std::vector<Tensor> frames;
    };
    std::vector<Source> sources_; // one per usable (sequence, factor) pair
    std::vector<std::string> skipped_;
    TrainConfig cfg_;
    Rng root_;
};

struct TrainOptions {
    std::string checkpoint_dir;  // weights dumped per epoch when non-empty
    std::ostream* log = nullptr; // receives "epoch,step,loss,lr" lines
};

// Minibatch ADAM over the sampled patch set (the same sample_count samples
// revisited every epoch). Updates `weights` in place and returns the mean
// loss of each epoch. Throws NumericError if a loss turns non-finite.
std::vector<double> train(ModelWeights& weights, const Dataset& data, const TrainConfig& cfg,
                          const TrainOptions& opts = {});

} // namespace fastdvd
