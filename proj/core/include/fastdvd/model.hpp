#pragma once

#include "fastdvd/autograd.hpp"
#include "fastdvd/kernels.hpp"
#include "fastdvd/optim.hpp"
#include "fastdvd/rng.hpp"
#include "fastdvd/tensor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fastdvd {

// One denoising block: a 16-convolution U-Net over `input_frames` noisy
// frames plus a noise map, predicting the noise of the central frame.
// Layout (c0, c1, c2 are the channel widths at full, half, quarter
// resolution):
//   inc1    grouped conv, one (frame + map) 4-channel group per frame -> 30
//           channels per frame, BN+ReLU
//   inc2    conv 30*F -> c0, BN+ReLU
//   down1a  stride-2 conv c0 -> c1, BN+ReLU;  down1b, down1c  c1 -> c1
//   down2a  stride-2 conv c1 -> c2, BN+ReLU;  down2b, down2c  c2 -> c2
//   up2a, up2b  c2 -> c2, BN+ReLU;  up2c  c2 -> 4*c1 (plain), pixel_shuffle,
//           then added to the down1 output
//   up1a, up1b  c1 -> c1, BN+ReLU;  up1c  c1 -> 4*c0 (plain), pixel_shuffle,
//           then added to the inc output
//   out1    c0 -> c0, BN+ReLU;  out2  c0 -> 3, no BN, no activation
// The block output is central_frame - out2 (the network learns the noise).
template <typename T>
struct DenBlockWeightsT {
    int input_frames = 3;
    int c0 = 32;
    int c1 = 64;
    int c2 = 128;

    ConvParamsT<T> inc1, inc2;
    ConvParamsT<T> down1a, down1b, down1c;
    ConvParamsT<T> down2a, down2b, down2c;
    ConvParamsT<T> up2a, up2b, up2c;
    ConvParamsT<T> up1a, up1b, up1c;
    ConvParamsT<T> out1, out2;

    BatchNormParamsT<T> bn_inc1, bn_inc2;
    BatchNormParamsT<T> bn_down1a, bn_down1b, bn_down1c;
    BatchNormParamsT<T> bn_down2a, bn_down2b, bn_down2c;
    BatchNormParamsT<T> bn_up2a, bn_up2b;
    BatchNormParamsT<T> bn_up1a, bn_up1b;
    BatchNormParamsT<T> bn_out1;
};

using DenBlockWeights = DenBlockWeightsT<float>;

// Visits the 16 conv layers in a fixed order: fn(name, conv, bn_or_null).
template <typename T, typename Fn>
void for_each_layer(DenBlockWeightsT<T>& w, Fn&& fn) {
    fn("inc1", w.inc1, &w.bn_inc1);
    fn("inc2", w.inc2, &w.bn_inc2);
    fn("down1a", w.down1a, &w.bn_down1a);
    fn("down1b", w.down1b, &w.bn_down1b);
    fn("down1c", w.down1c, &w.bn_down1c);
    fn("down2a", w.down2a, &w.bn_down2a);
    fn("down2b", w.down2b, &w.bn_down2b);
    fn("down2c", w.down2c, &w.bn_down2c);
    fn("up2a", w.up2a, &w.bn_up2a);
    fn("up2b", w.up2b, &w.bn_up2b);
    fn("up2c", w.up2c, nullptr);
    fn("up1a", w.up1a, &w.bn_up1a);
    fn("up1b", w.up1b, &w.bn_up1b);
    fn("up1c", w.up1c, nullptr);
    fn("out1", w.out1, &w.bn_out1);
    fn("out2", w.out2, nullptr);
}

enum class Variant : std::uint8_t { cascade = 0, five_input = 1 };

// cascade: three weight-shared applications of block1 over the overlapping
// frame triplets, their outputs fused by block2. five_input: one block over
// all five frames.
template <typename T>
struct ModelWeightsT {
    Variant variant = Variant::cascade;
    int c0 = 32;
    int c1 = 64;
    int c2 = 128;
    DenBlockWeightsT<T> block1;
    std::optional<DenBlockWeightsT<T>> block2;
};

using ModelWeights = ModelWeightsT<float>;

namespace detail {

template <typename T>
ConvParamsT<T> make_conv(int out_ch, int in_ch, int stride, int groups) {
    ConvParamsT<T> p;
    p.kernel = TensorT<T>(out_ch, in_ch / groups, 3, 3);
    p.bias.assign(out_ch, T(0));
    p.stride = stride;
    p.groups = groups;
    return p;
}

template <typename T>
DenBlockWeightsT<T> make_den_block(int input_frames, int c0, int c1, int c2) {
    DenBlockWeightsT<T> w;
    w.input_frames = input_frames;
    w.c0 = c0;
    w.c1 = c1;
    w.c2 = c2;
    const int per_frame = 30;
    const int f = input_frames;
    w.inc1 = make_conv<T>(per_frame * f, 4 * f, 1, f);
    w.inc2 = make_conv<T>(c0, per_frame * f, 1, 1);
    w.down1a = make_conv<T>(c1, c0, 2, 1);
    w.down1b = make_conv<T>(c1, c1, 1, 1);
    w.down1c = make_conv<T>(c1, c1, 1, 1);
    w.down2a = make_conv<T>(c2, c1, 2, 1);
    w.down2b = make_conv<T>(c2, c2, 1, 1);
    w.down2c = make_conv<T>(c2, c2, 1, 1);
    w.up2a = make_conv<T>(c2, c2, 1, 1);
    w.up2b = make_conv<T>(c2, c2, 1, 1);
    w.up2c = make_conv<T>(4 * c1, c2, 1, 1);
    w.up1a = make_conv<T>(c1, c1, 1, 1);
    w.up1b = make_conv<T>(c1, c1, 1, 1);
    w.up1c = make_conv<T>(4 * c0, c1, 1, 1);
    w.out1 = make_conv<T>(c0, c0, 1, 1);
    w.out2 = make_conv<T>(3, c0, 1, 1);
    for_each_layer(w, [&](const char*, ConvParamsT<T>& conv, BatchNormParamsT<T>* bn) {
        if (bn) *bn = BatchNormParamsT<T>::identity(conv.out_channels());
    });
    return w;
}

} // namespace detail

// Zero-valued weights with the right shapes.
template <typename T>
ModelWeightsT<T> make_model(Variant variant, int c0 = 32, int c1 = 64, int c2 = 128) {
    ModelWeightsT<T> m;
    m.variant = variant;
    m.c0 = c0;
    m.c1 = c1;
    m.c2 = c2;
    if (variant == Variant::cascade) {
        m.block1 = detail::make_den_block<T>(3, c0, c1, c2);
        m.block2 = detail::make_den_block<T>(3, c0, c1, c2);
    } else {
        m.block1 = detail::make_den_block<T>(5, c0, c1, c2);
        m.block2.reset();
    }
    return m;
}

// Fan-in-scaled uniform init followed by one orthogonalization pass.
// BN affine is (gamma=1, beta=0) with running stats (0, 1). A fixed seed
// gives bit-identical weights.
template <typename T>
ModelWeightsT<T> init_weights(Variant variant, std::uint64_t seed, int c0 = 32, int c1 = 64,
                              int c2 = 128) {
    ModelWeightsT<T> m = make_model<T>(variant, c0, c1, c2);
    Rng rng(seed);
    auto fill_block = [&](DenBlockWeightsT<T>& b) {
        for_each_layer(b, [&](const char*, ConvParamsT<T>& conv, BatchNormParamsT<T>*) {
            const double bound =
                1.0 / std::sqrt(static_cast<double>(conv.kernel.c()) * 9.0);
            for (std::size_t i = 0; i < conv.kernel.size(); ++i) {
                conv.kernel[i] = static_cast<T>(rng.uniform(-bound, bound));
            }
            for (auto& b0 : conv.bias) b0 = static_cast<T>(rng.uniform(-bound, bound));
            orthogonalize_kernel(conv.kernel);
        });
    };
    fill_block(m.block1);
    if (m.block2) fill_block(*m.block2);
    return m;
}

// Re-orthogonalizes every conv kernel in the model. Returns how many kernels
// were skipped as rank-deficient.
template <typename T>
int orthogonalize_all(ModelWeightsT<T>& m) {
    int skipped = 0;
    auto run = [&](DenBlockWeightsT<T>& b) {
        for_each_layer(b, [&](const char*, ConvParamsT<T>& conv, BatchNormParamsT<T>*) {
            if (!orthogonalize_kernel(conv.kernel)) ++skipped;
        });
    };
    run(m.block1);
    if (m.block2) run(*m.block2);
    return skipped;
}

// Trainable parameters as (name, flat storage), fixed order. Names match the
// gradient keys produced by record_model_forward and the weights file.
template <typename T, typename Fn>
void visit_trainable(ModelWeightsT<T>& m, Fn&& fn) {
    auto run = [&](const std::string& prefix, DenBlockWeightsT<T>& b) {
        for_each_layer(b, [&](const char* lname, ConvParamsT<T>& conv, BatchNormParamsT<T>* bn) {
            const std::string base = prefix + "." + lname;
            fn(base + ".weight", std::span<T>(conv.kernel.data(), conv.kernel.size()));
            fn(base + ".bias", std::span<T>(conv.bias));
            if (bn) {
                fn(base + ".bn_gamma", std::span<T>(bn->gamma));
                fn(base + ".bn_beta", std::span<T>(bn->beta));
            }
        });
    };
    run("block1", m.block1);
    if (m.block2) run("block2", *m.block2);
}

// Every serialized tensor, including BN running statistics:
// fn(name, flat storage, dims) with dims empty meaning 1-D of storage size.
template <typename T, typename Fn>
void visit_all(ModelWeightsT<T>& m, Fn&& fn) {
    auto run = [&](const std::string& prefix, DenBlockWeightsT<T>& b) {
        for_each_layer(b, [&](const char* lname, ConvParamsT<T>& conv, BatchNormParamsT<T>* bn) {
            const std::string base = prefix + "." + lname;
            const Dims kd = conv.kernel.dims();
            fn(base + ".weight", std::span<T>(conv.kernel.data(), conv.kernel.size()),
               std::vector<std::uint32_t>{static_cast<std::uint32_t>(kd.n),
                                          static_cast<std::uint32_t>(kd.c),
                                          static_cast<std::uint32_t>(kd.h),
                                          static_cast<std::uint32_t>(kd.w)});
            fn(base + ".bias", std::span<T>(conv.bias),
               std::vector<std::uint32_t>{static_cast<std::uint32_t>(conv.bias.size())});
            if (bn) {
                const auto vec1 = [](const std::vector<T>& v) {
                    return std::vector<std::uint32_t>{static_cast<std::uint32_t>(v.size())};
                };
                fn(base + ".bn_gamma", std::span<T>(bn->gamma), vec1(bn->gamma));
                fn(base + ".bn_beta", std::span<T>(bn->beta), vec1(bn->beta));
                fn(base + ".bn_mean", std::span<T>(bn->running_mean), vec1(bn->running_mean));
                fn(base + ".bn_var", std::span<T>(bn->running_var), vec1(bn->running_var));
            }
        });
    };
    run("block1", m.block1);
    if (m.block2) run("block2", *m.block2);
}

template <typename T>
std::size_t param_count(DenBlockWeightsT<T>& b) {
    std::size_t total = 0;
    for_each_layer(b, [&](const char*, ConvParamsT<T>& conv, BatchNormParamsT<T>* bn) {
        total += conv.kernel.size() + conv.bias.size();
        if (bn) total += bn->gamma.size() + bn->beta.size();
    });
    return total;
}

namespace detail {

// The block topology is written once against an executor; the executor
// decides whether ops run eagerly (inference) or get recorded on a tape
// (training), so both paths cannot diverge structurally.
template <typename T>
struct EagerExec {
    using Handle = TensorT<T>;
    bool training = false;

    Handle conv(const Handle& x, ConvParamsT<T>& p, const char*) { return conv2d(x, p); }
    Handle bn_relu(const Handle& x, BatchNormParamsT<T>& bn, const char*) {
        return fastdvd::relu(batch_norm(x, bn, training));
    }
    Handle shuffle(const Handle& x) { return fastdvd::pixel_shuffle(x); }
    Handle addh(const Handle& a, const Handle& b) { return fastdvd::add(a, b); }
    Handle subh(const Handle& a, const Handle& b) { return fastdvd::sub(a, b); }
    Handle concat(std::span<const Handle> parts) {
        return concat_channels(std::span<const TensorT<T>>(parts.data(), parts.size()));
    }
    const Dims& dims(const Handle& h) const { return h.dims(); }
};

template <typename T>
struct GraphExec {
    using Handle = typename GraphT<T>::NodeId;
    GraphT<T>* g = nullptr;
    std::string prefix;
    bool update_running = true;
    std::map<std::string, Handle>* cache = nullptr;

    Handle leaf(const std::string& name, TensorT<T> value) {
        auto it = cache->find(name);
        if (it != cache->end()) return it->second;
        Handle id = g->param(name, std::move(value));
        cache->emplace(name, id);
        return id;
    }

    Handle conv(Handle x, ConvParamsT<T>& p, const char* lname) {
        const std::string base = prefix + "." + lname;
        Handle k = leaf(base + ".weight", p.kernel);
        Handle b = leaf(base + ".bias",
                        TensorT<T>(Dims{1, static_cast<int>(p.bias.size()), 1, 1}, p.bias));
        return g->conv2d(x, k, b, p.stride, p.groups);
    }

    Handle bn_relu(Handle x, BatchNormParamsT<T>& bn, const char* lname) {
        const std::string base = prefix + "." + lname;
        const int c = bn.channels();
        Handle ga = leaf(base + ".bn_gamma", TensorT<T>(Dims{1, c, 1, 1}, bn.gamma));
        Handle be = leaf(base + ".bn_beta", TensorT<T>(Dims{1, c, 1, 1}, bn.beta));
        return g->relu(g->batch_norm(x, ga, be, &bn, update_running));
    }

    Handle shuffle(Handle x) { return g->pixel_shuffle(x); }
    Handle addh(Handle a, Handle b) { return g->add(a, b); }
    Handle subh(Handle a, Handle b) { return g->sub(a, b); }
    Handle concat(std::span<const Handle> parts) { return g->concat(parts); }
    const Dims& dims(Handle h) const { return g->value(h).dims(); }
};

template <typename T, typename Ex>
typename Ex::Handle den_block_apply(Ex& ex, DenBlockWeightsT<T>& w,
                                    std::span<const typename Ex::Handle> frames,
                                    const typename Ex::Handle& noise_map) {
    if (static_cast<int>(frames.size()) != w.input_frames) {
        throw ShapeError("den_block: expected " + std::to_string(w.input_frames) +
                         " frames, got " + std::to_string(frames.size()));
    }
    const Dims fd = ex.dims(frames[0]);
    for (const auto& f : frames) {
        if (!(ex.dims(f) == fd)) {
            throw ShapeError("den_block: frame dims mismatch, " + fd.str() + " vs " +
                             ex.dims(f).str());
        }
    }
    if (fd.c != 3) {
        throw ShapeError("den_block: frames must have 3 channels, got " + std::to_string(fd.c));
    }
    const Dims md = ex.dims(noise_map);
    if (md.c != 1 || md.n != fd.n || md.h != fd.h || md.w != fd.w) {
        throw ShapeError("den_block: noise map must be 1-channel with frame spatial dims, got " +
                         md.str() + " for frames " + fd.str());
    }
    if (fd.h % 4 != 0 || fd.w % 4 != 0 || fd.h < 8 || fd.w < 8) {
        throw ShapeError("den_block: spatial dims " + std::to_string(fd.h) + "x" +
                         std::to_string(fd.w) +
                         " must be >= 8 and divisible by 4; pad the input first "
                         "(pad_to_multiple)");
    }

    using Handle = typename Ex::Handle;
    std::vector<Handle> groups;
    groups.reserve(frames.size() * 2);
    for (const auto& f : frames) {
        groups.push_back(f);
        groups.push_back(noise_map);
    }
    Handle x = ex.concat(std::span<const Handle>(groups));

    Handle h = ex.bn_relu(ex.conv(x, w.inc1, "inc1"), w.bn_inc1, "inc1");
    h = ex.bn_relu(ex.conv(h, w.inc2, "inc2"), w.bn_inc2, "inc2");
    Handle skip_full = h;

    h = ex.bn_relu(ex.conv(h, w.down1a, "down1a"), w.bn_down1a, "down1a");
    h = ex.bn_relu(ex.conv(h, w.down1b, "down1b"), w.bn_down1b, "down1b");
    h = ex.bn_relu(ex.conv(h, w.down1c, "down1c"), w.bn_down1c, "down1c");
    Handle skip_half = h;

    h = ex.bn_relu(ex.conv(h, w.down2a, "down2a"), w.bn_down2a, "down2a");
    h = ex.bn_relu(ex.conv(h, w.down2b, "down2b"), w.bn_down2b, "down2b");
    h = ex.bn_relu(ex.conv(h, w.down2c, "down2c"), w.bn_down2c, "down2c");

    h = ex.bn_relu(ex.conv(h, w.up2a, "up2a"), w.bn_up2a, "up2a");
    h = ex.bn_relu(ex.conv(h, w.up2b, "up2b"), w.bn_up2b, "up2b");
    h = ex.addh(ex.shuffle(ex.conv(h, w.up2c, "up2c")), skip_half);

    h = ex.bn_relu(ex.conv(h, w.up1a, "up1a"), w.bn_up1a, "up1a");
    h = ex.bn_relu(ex.conv(h, w.up1b, "up1b"), w.bn_up1b, "up1b");
    h = ex.addh(ex.shuffle(ex.conv(h, w.up1c, "up1c")), skip_full);

    h = ex.bn_relu(ex.conv(h, w.out1, "out1"), w.bn_out1, "out1");
    h = ex.conv(h, w.out2, "out2");

    return ex.subh(frames[frames.size() / 2], h);
}

template <typename T, typename Ex>
typename Ex::Handle cascade_apply(Ex& ex1, Ex& ex2, ModelWeightsT<T>& m,
                                  std::span<const typename Ex::Handle> frames,
                                  const typename Ex::Handle& noise_map) {
    if (frames.size() != 5) {
        throw ShapeError("cascade forward: expected 5 frames, got " +
                         std::to_string(frames.size()));
    }
    using Handle = typename Ex::Handle;
    std::vector<Handle> stage1;
    stage1.reserve(3);
    for (int t = 0; t < 3; ++t) {
        std::vector<Handle> triplet{frames[t], frames[t + 1], frames[t + 2]};
        stage1.push_back(
            den_block_apply<T>(ex1, m.block1, std::span<const Handle>(triplet), noise_map));
    }
    return den_block_apply<T>(ex2, *m.block2, std::span<const Handle>(stage1), noise_map);
}

} // namespace detail

// Single-block forward (inference or BN-training statistics).
template <typename T>
TensorT<T> den_block_forward(DenBlockWeightsT<T>& w, std::span<const TensorT<T>> frames,
                             const TensorT<T>& noise_map, bool training = false) {
    detail::EagerExec<T> ex{training};
    return detail::den_block_apply<T>(ex, w, frames, noise_map);
}

// Two-step cascade over 5 frames; the three first-stage evaluations share
// block1's parameters.
template <typename T>
TensorT<T> fastdvdnet_forward(ModelWeightsT<T>& m, std::span<const TensorT<T>> frames,
                              const TensorT<T>& noise_map, bool training = false) {
    if (m.variant != Variant::cascade || !m.block2) {
        throw Error("fastdvdnet_forward: model is not a cascade variant");
    }
    detail::EagerExec<T> ex{training};
    return detail::cascade_apply<T>(ex, ex, m, frames, noise_map);
}

// One-step ablation variant: a single block over all 5 frames.
template <typename T>
TensorT<T> five_input_forward(ModelWeightsT<T>& m, std::span<const TensorT<T>> frames,
                              const TensorT<T>& noise_map, bool training = false) {
    if (m.variant != Variant::five_input) {
        throw Error("five_input_forward: model is not a five_input variant");
    }
    if (frames.size() != 5) {
        throw ShapeError("five_input forward: expected 5 frames, got " +
                         std::to_string(frames.size()));
    }
    detail::EagerExec<T> ex{training};
    return detail::den_block_apply<T>(ex, m.block1, frames, noise_map);
}

template <typename T>
TensorT<T> model_forward(ModelWeightsT<T>& m, std::span<const TensorT<T>> frames,
                         const TensorT<T>& noise_map, bool training = false) {
    return m.variant == Variant::cascade ? fastdvdnet_forward(m, frames, noise_map, training)
                                         : five_input_forward(m, frames, noise_map, training);
}

// Records the full model forward on a tape for training. Frame/map nodes
// must already live on `g`; parameters are introduced with the canonical
// names, shared across the three first-stage applications.
template <typename T>
typename GraphT<T>::NodeId record_model_forward(GraphT<T>& g, ModelWeightsT<T>& m,
                                                std::span<const typename GraphT<T>::NodeId> frames,
                                                typename GraphT<T>::NodeId noise_map,
                                                bool update_running = true) {
    std::map<std::string, typename GraphT<T>::NodeId> cache;
    if (m.variant == Variant::cascade) {
        if (!m.block2) throw Error("cascade model missing block2");
        detail::GraphExec<T> ex1{&g, "block1", update_running, &cache};
        detail::GraphExec<T> ex2{&g, "block2", update_running, &cache};
        return detail::cascade_apply<T>(ex1, ex2, m, frames, noise_map);
    }
    if (frames.size() != 5) {
        throw ShapeError("five_input forward: expected 5 frames, got " +
                         std::to_string(frames.size()));
    }
    detail::GraphExec<T> ex{&g, "block1", update_running, &cache};
    return detail::den_block_apply<T>(ex, m.block1, frames, noise_map);
}

// Weights file round-trip; format documented in the README. Throws IoError
// on filesystem failures and FormatError on malformed content.
void save_weights(const ModelWeights& m, const std::string& path);
ModelWeights load_weights(const std::string& path);

} // namespace fastdvd
