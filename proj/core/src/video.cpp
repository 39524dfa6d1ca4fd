#include "fastdvd/video.hpp"

#include "fastdvd/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <span>
#include <utility>

namespace fastdvd {

namespace fs = std::filesystem;

FrameSequence load_sequence(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw IoError("'" + dir + "' is not a directory");
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        if (ext == ".png") names.push_back(entry.path().filename().string());
    }
    if (names.empty()) {
        throw IoError("no PNG frames in '" + dir + "'");
    }
    std::sort(names.begin(), names.end());

    FrameSequence seq;
    seq.source = dir;
    seq.frames.reserve(names.size());
    for (const std::string& name : names) {
        Tensor frame = load_png((fs::path(dir) / name).string());
        if (!seq.frames.empty() && !(frame.dims() == seq.frames.front().dims())) {
            throw ShapeError("frame '" + name + "' has dims " + frame.dims().str() +
                             ", first frame has " + seq.frames.front().dims().str());
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

void save_sequence(const FrameSequence& seq, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) {
        throw IoError("cannot create directory '" + dir + "'");
    }
    char name[16];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof name, "%05zu.png", i);
        save_png(seq.frames[i], (fs::path(dir) / name).string());
    }
}

FrameSequence add_awgn(const FrameSequence& seq, const NoiseSpec& spec) {
    if (spec.sigma < 0.0f) {
        throw Error("add_awgn: sigma must be >= 0, got " + std::to_string(spec.sigma));
    }
    if (spec.sigma == 0.0f && !spec.clipped) {
        return seq;
    }
    FrameSequence out;
    out.fps = seq.fps;
    out.source = seq.source;
    out.frames.reserve(seq.frames.size());
    const float s = spec.sigma / 255.0f;
    Rng root(spec.seed);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        Rng rng = root.derive(i);
        Tensor noisy = seq.frames[i];
        if (spec.sigma > 0.0f) {
            for (std::size_t j = 0; j < noisy.size(); ++j) {
                noisy[j] += s * static_cast<float>(rng.next_gaussian());
            }
        }
        if (spec.clipped) {
            for (std::size_t j = 0; j < noisy.size(); ++j) {
                noisy[j] = std::clamp(noisy[j], 0.0f, 1.0f);
            }
        }
        out.frames.push_back(std::move(noisy));
    }
    return out;
}

Tensor build_noise_map(float sigma, int h, int w, int n) {
    if (sigma < 0.0f) {
        throw Error("build_noise_map: sigma must be >= 0, got " + std::to_string(sigma));
    }
    return Tensor::full(Dims{n, 1, h, w}, sigma / 255.0f);
}

long reflect_index(long i, long n) {
    if (n <= 0) {
        throw Error("reflect_index: n must be >= 1");
    }
    if (n == 1) return 0;
    const long period = 2 * n - 2;
    long m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

std::array<long, 5> window_indices(long t, long n_frames) {
    if (t < 0 || t >= n_frames) {
        throw Error("window_indices: t=" + std::to_string(t) + " outside [0, " +
                    std::to_string(n_frames) + ")");
    }
    std::array<long, 5> w;
    for (int k = 0; k < 5; ++k) w[k] = reflect_index(t - 2 + k, n_frames);
    return w;
}

PaddedFrame pad_to_multiple(const Tensor& x, int multiple) {
    const int ph = (multiple - x.h() % multiple) % multiple;
    const int pw = (multiple - x.w() % multiple) % multiple;
    PaddedFrame out;
    out.orig_h = x.h();
    out.orig_w = x.w();
    if (ph == 0 && pw == 0) {
        out.frame = x;
        return out;
    }
    Tensor y(x.n(), x.c(), x.h() + ph, x.w() + pw);
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            for (int h = 0; h < y.h(); ++h) {
                const long sh = reflect_index(h, x.h());
                for (int w = 0; w < y.w(); ++w) {
                    y.at(n, c, h, w) = x.at(n, c, static_cast<int>(sh),
                                            static_cast<int>(reflect_index(w, x.w())));
                }
            }
        }
    }
    out.frame = std::move(y);
    return out;
}

Tensor crop_topleft(const Tensor& x, int h, int w) {
    if (h > x.h() || w > x.w() || h < 1 || w < 1) {
        throw ShapeError("crop_topleft: " + std::to_string(h) + "x" + std::to_string(w) +
                         " does not fit in " + x.dims().str());
    }
    if (h == x.h() && w == x.w()) return x;
    Tensor y(x.n(), x.c(), h, w);
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c)
            for (int i = 0; i < h; ++i) {
                const float* src = &x.at(n, c, i, 0);
                std::copy(src, src + w, &y.at(n, c, i, 0));
            }
    return y;
}

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw ShapeError("resize_bilinear: target dims must be >= 1");
    }
    if (out_h == x.h() && out_w == x.w()) return x;
    Tensor y(x.n(), x.c(), out_h, out_w);
    const double sy = static_cast<double>(x.h()) / out_h;
    const double sx = static_cast<double>(x.w()) / out_w;
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            for (int i = 0; i < out_h; ++i) {
                const double fy = (i + 0.5) * sy - 0.5;
                const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, x.h() - 1);
                const int y1 = std::min(y0 + 1, x.h() - 1);
                const double wy = std::clamp(fy - y0, 0.0, 1.0);
                for (int j = 0; j < out_w; ++j) {
                    const double fx = (j + 0.5) * sx - 0.5;
                    const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, x.w() - 1);
                    const int x1 = std::min(x0 + 1, x.w() - 1);
                    const double wx = std::clamp(fx - x0, 0.0, 1.0);
                    const double top = (1.0 - wx) * x.at(n, c, y0, x0) + wx * x.at(n, c, y0, x1);
                    const double bot = (1.0 - wx) * x.at(n, c, y1, x0) + wx * x.at(n, c, y1, x1);
                    y.at(n, c, i, j) = static_cast<float>((1.0 - wy) * top + wy * bot);
                }
            }
        }
    }
    return y;
}

DenoiseResult denoise_sequence(const FrameSequence& noisy, float sigma, ModelWeights& weights,
                               bool streaming) {
    if (noisy.frames.empty()) {
        throw Error("denoise_sequence: empty sequence");
    }
    const long n = noisy.count();

    std::vector<Tensor> padded;
    padded.reserve(noisy.frames.size());
    for (const Tensor& f : noisy.frames) padded.push_back(pad_to_multiple(f).frame);
    const int ph = padded.front().h();
    const int pw = padded.front().w();
    const Tensor map = build_noise_map(sigma, ph, pw);

    DenoiseResult result;
    result.frames.fps = noisy.fps;
    result.frames.source = noisy.source;
    result.frames.frames.reserve(noisy.frames.size());

    StreamState cache;
    const bool cascade = weights.variant == Variant::cascade;

    for (long t = 0; t < n; ++t) {
        const auto start = std::chrono::steady_clock::now();
        const auto w = window_indices(t, n);
        Tensor out;
        if (cascade) {
            std::vector<Tensor> stage1;
            stage1.reserve(3);
            for (int j = 0; j < 3; ++j) {
                const long center = t - 1 + j;
                if (streaming) {
                    if (const Tensor* hit = cache.find(center)) {
                        ++result.stats.cache_hits;
                        stage1.push_back(*hit);
                        continue;
                    }
                }
                std::vector<Tensor> triplet{padded[w[j]], padded[w[j + 1]], padded[w[j + 2]]};
                Tensor est = den_block_forward(weights.block1,
                                               std::span<const Tensor>(triplet), map);
                ++result.stats.block1_evals;
                if (streaming) cache.insert(center, est);
                stage1.push_back(std::move(est));
            }
            out = den_block_forward(*weights.block2, std::span<const Tensor>(stage1), map);
            ++result.stats.block2_evals;
        } else {
            std::vector<Tensor> window;
            window.reserve(5);
            for (long idx : w) window.push_back(padded[idx]);
            out = den_block_forward(weights.block1, std::span<const Tensor>(window), map);
            ++result.stats.block1_evals;
        }
        result.frames.frames.push_back(
            crop_topleft(out, noisy.frames[t].h(), noisy.frames[t].w()));
        const auto stop = std::chrono::steady_clock::now();
        result.stats.frame_seconds.push_back(
            std::chrono::duration<double>(stop - start).count());
    }
    return result;
}

} // namespace fastdvd
