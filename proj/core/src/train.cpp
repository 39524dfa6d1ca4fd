#include "fastdvd/train.hpp"

#include "fastdvd/autograd.hpp"
#include "fastdvd/errors.hpp"
#include "fastdvd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <span>

namespace fastdvd {

namespace fs = std::filesystem;

void validate(const TrainConfig& cfg) {
    if (cfg.patch_size < 8 || cfg.patch_size % 4 != 0) {
        throw ConfigError("patch_size must be >= 8 and a multiple of 4, got " +
                          std::to_string(cfg.patch_size));
    }
    if (cfg.temporal_span != 5) {
        throw ConfigError("temporal_span must be 5, got " + std::to_string(cfg.temporal_span));
    }
    if (cfg.sigma_low < 0.0f || cfg.sigma_high > 255.0f || cfg.sigma_low > cfg.sigma_high) {
        throw ConfigError("sigma range must satisfy 0 <= low <= high <= 255");
    }
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.ortho_epochs < 0) throw ConfigError("ortho_epochs must be >= 0");
    if (cfg.sample_count < cfg.batch_size) {
        throw ConfigError("sample_count " + std::to_string(cfg.sample_count) +
                          " is smaller than batch_size " + std::to_string(cfg.batch_size));
    }
    lr_for_epoch(cfg.lr_schedule, 0); // validates the schedule shape
    if (cfg.augmentation.scale_factors.empty()) {
        throw ConfigError("scale_factors must not be empty");
    }
    for (float f : cfg.augmentation.scale_factors) {
        if (!(f > 0.0f)) throw ConfigError("scale factors must be positive");
    }
}

namespace {

Tensor mirrored(const Tensor& t, bool horizontal, bool vertical) {
    const Dims d = t.dims();
    Tensor out(d);
    for (int n = 0; n < d.n; ++n) {
        for (int c = 0; c < d.c; ++c) {
            for (int y = 0; y < d.h; ++y) {
                const int sy = vertical ? d.h - 1 - y : y;
                for (int x = 0; x < d.w; ++x) {
                    out.at(n, c, y, x) = t.at(n, c, sy, horizontal ? d.w - 1 - x : x);
                }
            }
        }
    }
    return out;
}

Tensor crop_patch(const Tensor& frame, long top, long left, int p) {
    Tensor out(1, frame.c(), p, p);
    for (int c = 0; c < frame.c(); ++c) {
        for (int y = 0; y < p; ++y) {
            for (int x = 0; x < p; ++x) {
                out.at(0, c, y, x) = frame.at(0, c, top + y, left + x);
            }
        }
    }
    return out;
}

} // namespace

void flip_sample(TrainingSample& s, bool horizontal, bool vertical) {
    if (!horizontal && !vertical) return;
    for (Tensor& t : s.noisy) t = mirrored(t, horizontal, vertical);
    s.noise_map = mirrored(s.noise_map, horizontal, vertical);
    s.clean = mirrored(s.clean, horizontal, vertical);
}

void augment(TrainingSample& s, Rng& rng, const AugmentConfig& cfg) {
    if (!cfg.flips) return;
    const bool h = rng.next_bool();
    const bool v = rng.next_bool();
    flip_sample(s, h, v);
}

Dataset load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) subdirs.push_back(entry.path());
    }
    if (subdirs.empty()) throw IoError("no sequence subdirectories in " + dir);
    std::sort(subdirs.begin(), subdirs.end());
    Dataset data;
    data.reserve(subdirs.size());
    for (const fs::path& p : subdirs) data.push_back(load_sequence(p.string()));
    return data;
}

PatchSampler::PatchSampler(const Dataset& data, const TrainConfig& cfg)
    : cfg_(cfg), root_(cfg.seed) {
    validate(cfg);
    for (std::size_t si = 0; si < data.size(); ++si) {
        const FrameSequence& seq = data[si];
        if (seq.count() < cfg.temporal_span) {
            skipped_.push_back("sequence " + std::to_string(si) + ": " +
                               std::to_string(seq.count()) + " frames < span " +
                               std::to_string(cfg.temporal_span));
            continue;
        }
        for (float factor : cfg.augmentation.scale_factors) {
            const int sh = static_cast<int>(std::lround(seq.height() * factor));
            const int sw = static_cast<int>(std::lround(seq.width() * factor));
            if (sh < cfg.patch_size || sw < cfg.patch_size) {
                skipped_.push_back("sequence " + std::to_string(si) + " at scale " +
                                   std::to_string(factor) + ": " + std::to_string(sh) + "x" +
                                   std::to_string(sw) + " < patch " +
                                   std::to_string(cfg.patch_size));
                continue;
            }
            Source src;
            src.frames.reserve(seq.frames.size());
            for (const Tensor& f : seq.frames) {
                src.frames.push_back(factor == 1.0f ? f : resize_bilinear(f, sh, sw));
            }
            sources_.push_back(std::move(src));
        }
    }
    for (const std::string& msg : skipped_) {
        std::cerr << "warning: skipping " << msg << "\n";
    }
    if (sources_.empty()) throw Error("no usable training sequences");
}

TrainingSample PatchSampler::sample(std::uint64_t index) const {
    Rng rng = root_.derive(index);
    const Source& src = sources_[rng.next_below(sources_.size())];
    const int span = cfg_.temporal_span;
    const int half = span / 2;
    const int p = cfg_.patch_size;
    const long n = static_cast<long>(src.frames.size());
    const Dims d = src.frames[0].dims();

    const long center = half + static_cast<long>(rng.next_below(n - span + 1));
    const long top = static_cast<long>(rng.next_below(d.h - p + 1));
    const long left = static_cast<long>(rng.next_below(d.w - p + 1));
    const float sigma = static_cast<float>(rng.uniform(cfg_.sigma_low, cfg_.sigma_high));
    const float scale = sigma / 255.0f;

    TrainingSample s;
    s.clean = crop_patch(src.frames[center], top, left, p);
    s.noise_map = Tensor::full(Dims{1, 1, p, p}, scale);
    s.noisy.reserve(span);
    for (int j = 0; j < span; ++j) {
        Tensor patch = crop_patch(src.frames[center - half + j], top, left, p);
        for (std::size_t i = 0; i < patch.size(); ++i) {
            patch[i] += scale * static_cast<float>(rng.next_gaussian());
        }
        s.noisy.push_back(std::move(patch));
    }
    augment(s, rng, cfg_.augmentation);
    return s;
}

std::vector<double> train(ModelWeights& weights, const Dataset& data, const TrainConfig& cfg,
                          const TrainOptions& opts) {
    validate(cfg);
    PatchSampler sampler(data, cfg);
    const long steps = cfg.sample_count / cfg.batch_size;

    std::vector<std::pair<std::string, std::span<float>>> params;
    visit_trainable(weights, [&](const std::string& name, std::span<float> values) {
        params.emplace_back(name, values);
    });
    AdamOptimizer adam;

    if (!opts.checkpoint_dir.empty()) fs::create_directories(opts.checkpoint_dir);

    const int span = cfg.temporal_span;
    const int p = cfg.patch_size;
    const int B = cfg.batch_size;
    const std::size_t frame_len = static_cast<std::size_t>(3) * p * p;
    const std::size_t map_len = static_cast<std::size_t>(p) * p;

    std::vector<double> epoch_losses;
    epoch_losses.reserve(static_cast<std::size_t>(cfg.epochs));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_for_epoch(cfg.lr_schedule, epoch);
        double loss_sum = 0.0;
        for (long step = 0; step < steps; ++step) {
            std::vector<Tensor> frames(static_cast<std::size_t>(span), Tensor(B, 3, p, p));
            Tensor map(B, 1, p, p);
            Tensor target(B, 3, p, p);
            for (int b = 0; b < B; ++b) {
                TrainingSample s =
                    sampler.sample(static_cast<std::uint64_t>(step) * B + b);
                for (int j = 0; j < span; ++j) {
                    std::copy_n(s.noisy[j].data(), frame_len,
                                frames[j].data() + static_cast<std::size_t>(b) * frame_len);
                }
                std::copy_n(s.noise_map.data(), map_len,
                            map.data() + static_cast<std::size_t>(b) * map_len);
                std::copy_n(s.clean.data(), frame_len,
                            target.data() + static_cast<std::size_t>(b) * frame_len);
            }

            Graph g;
            std::vector<Graph::NodeId> frame_ids;
            frame_ids.reserve(frames.size());
            for (Tensor& f : frames) frame_ids.push_back(g.constant(std::move(f)));
            const Graph::NodeId map_id = g.constant(std::move(map));
            const Graph::NodeId est = record_model_forward(g, weights, frame_ids, map_id, true);
            const Graph::NodeId loss_id = g.mse_loss(est, g.constant(std::move(target)));

            const double loss = static_cast<double>(g.value(loss_id)[0]);
            if (!std::isfinite(loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(step));
            }
            auto grads = g.backward(loss_id);
            adam.step(params, grads, lr);
            loss_sum += loss;
            if (opts.log) {
                (*opts.log) << epoch << ',' << step << ',' << loss << ',' << lr << '\n';
            }
        }
        epoch_losses.push_back(loss_sum / static_cast<double>(steps));
        if (epoch < cfg.ortho_epochs) orthogonalize_all(weights);
        if (!opts.checkpoint_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%04d.weights", epoch);
            save_weights(weights, (fs::path(opts.checkpoint_dir) / name).string());
        }
    }
    return epoch_losses;
}

} // namespace fastdvd
