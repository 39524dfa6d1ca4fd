#pragma once

#include "fastdvd/tensor.hpp"
#include "fastdvd/thread_pool.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace fastdvd {

// All convolutions in the architecture are 3x3 with padding 1.
template <typename T>
struct ConvParamsT {
    TensorT<T> kernel;       // (out_ch, in_ch/groups, 3, 3)
    std::vector<T> bias;     // length out_ch
    int stride = 1;          // 1 or 2
    int padding = 1;         // fixed at 1
    int groups = 1;

    int out_channels() const { return kernel.n(); }
    int in_channels() const { return kernel.c() * groups; }
};

using ConvParams = ConvParamsT<float>;

template <typename T>
struct BatchNormParamsT {
    std::vector<T> gamma;
    std::vector<T> beta;
    std::vector<T> running_mean;
    std::vector<T> running_var;
    T eps = T(1e-5);
    T momentum = T(0.1);

    static BatchNormParamsT identity(int channels) {
        BatchNormParamsT p;
        p.gamma.assign(channels, T(1));
        p.beta.assign(channels, T(0));
        p.running_mean.assign(channels, T(0));
        p.running_var.assign(channels, T(1));
        return p;
    }

    int channels() const { return static_cast<int>(gamma.size()); }
};

using BatchNormParams = BatchNormParamsT<float>;

namespace detail {

// Fixed chunking of the output plane keeps the GEMM calls identical no
// matter how many worker threads run them, so conv results are
// bit-reproducible across thread counts.
inline constexpr long kConvColChunk = 1024;

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatCM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

// Fills `cols` (k_g x ncols, column-major) with the 3x3 patch feeding each of
// the output positions [col0, col0+ncols) for one sample and channel group.
template <typename T>
void im2col_chunk(const T* x, int in_h, int in_w, int group_ch, int stride,
                  int out_w, long col0, long ncols, T* cols) {
    const long plane = static_cast<long>(in_h) * in_w;
    for (long j = 0; j < ncols; ++j) {
        const long pos = col0 + j;
        const int oh = static_cast<int>(pos / out_w);
        const int ow = static_cast<int>(pos % out_w);
        const int ih0 = oh * stride - 1;
        const int iw0 = ow * stride - 1;
        T* col = cols + j * (static_cast<long>(group_ch) * 9);
        for (int ic = 0; ic < group_ch; ++ic) {
            const T* xc = x + ic * plane;
            for (int kh = 0; kh < 3; ++kh) {
                const int ih = ih0 + kh;
                const bool row_ok = ih >= 0 && ih < in_h;
                for (int kw = 0; kw < 3; ++kw) {
                    const int iw = iw0 + kw;
                    *col++ = (row_ok && iw >= 0 && iw < in_w)
                                 ? xc[static_cast<long>(ih) * in_w + iw]
                                 : T(0);
                }
            }
        }
    }
}

// Scatters columns of `cols` back into the input plane (adds into dx).
// Sequential per sample: columns overlap in the input.
template <typename T>
void col2im_add(const T* cols, int in_h, int in_w, int group_ch, int stride,
                int out_w, long col0, long ncols, T* dx) {
    const long plane = static_cast<long>(in_h) * in_w;
    for (long j = 0; j < ncols; ++j) {
        const long pos = col0 + j;
        const int oh = static_cast<int>(pos / out_w);
        const int ow = static_cast<int>(pos % out_w);
        const int ih0 = oh * stride - 1;
        const int iw0 = ow * stride - 1;
        const T* col = cols + j * (static_cast<long>(group_ch) * 9);
        for (int ic = 0; ic < group_ch; ++ic) {
            T* xc = dx + ic * plane;
            for (int kh = 0; kh < 3; ++kh) {
                const int ih = ih0 + kh;
                const bool row_ok = ih >= 0 && ih < in_h;
                for (int kw = 0; kw < 3; ++kw) {
                    const int iw = iw0 + kw;
                    if (row_ok && iw >= 0 && iw < in_w) {
                        xc[static_cast<long>(ih) * in_w + iw] += *col;
                    }
                    ++col;
                }
            }
        }
    }
}

template <typename T>
void check_conv_args(const TensorT<T>& x, const TensorT<T>& kernel,
                     std::span<const T> bias, int stride, int groups) {
    if (kernel.h() != 3 || kernel.w() != 3) {
        throw ShapeError("conv2d: kernel spatial size must be 3x3, got " +
                         kernel.dims().str());
    }
    if (stride != 1 && stride != 2) {
        throw ShapeError("conv2d: stride must be 1 or 2, got " + std::to_string(stride));
    }
    if (groups < 1 || kernel.n() % groups != 0) {
        throw ShapeError("conv2d: groups " + std::to_string(groups) +
                         " must divide out_channels " + std::to_string(kernel.n()));
    }
    const int expect_in = kernel.c() * groups;
    if (x.c() != expect_in) {
        throw ShapeError("conv2d: expected " + std::to_string(expect_in) +
                         " input channels, got " + std::to_string(x.c()));
    }
    if (!bias.empty() && static_cast<int>(bias.size()) != kernel.n()) {
        throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) +
                         " does not match out_channels " + std::to_string(kernel.n()));
    }
    if (stride == 2 && (x.h() < 3 || x.w() < 3)) {
        throw ShapeError("conv2d: stride-2 requires h,w >= 3, got " + x.dims().str());
    }
}

} // namespace detail

// 3x3 cross-correlation (no kernel flip), zero padding 1. Output spatial dims
// are ceil(h/stride) x ceil(w/stride). Grouped convolution partitions input
// and output channels into `groups` contiguous blocks.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const TensorT<T>& kernel,
                  std::span<const T> bias, int stride, int groups) {
    detail::check_conv_args(x, kernel, bias, stride, groups);

    const int out_ch = kernel.n();
    const int group_ch = kernel.c();
    const int out_pg = out_ch / groups;
    const int out_h = (x.h() - 1) / stride + 1;
    const int out_w = (x.w() - 1) / stride + 1;
    const long out_hw = static_cast<long>(out_h) * out_w;
    const long k_g = static_cast<long>(group_ch) * 9;

    TensorT<T> y(x.n(), out_ch, out_h, out_w);

    const long chunks_per_plane = (out_hw + detail::kConvColChunk - 1) / detail::kConvColChunk;
    const std::size_t total = static_cast<std::size_t>(x.n()) * groups * chunks_per_plane;

    parallel_tasks(total, [&](std::size_t task) {
        const long ci = static_cast<long>(task % chunks_per_plane);
        const int g = static_cast<int>((task / chunks_per_plane) % groups);
        const int n = static_cast<int>(task / (chunks_per_plane * groups));
        const long col0 = ci * detail::kConvColChunk;
        const long ncols = std::min(detail::kConvColChunk, out_hw - col0);

        thread_local std::vector<T> buf;
        buf.resize(static_cast<std::size_t>(k_g) * ncols);
        const T* xg = x.data() + (static_cast<long>(n) * x.c() + static_cast<long>(g) * group_ch) *
                                     x.h() * x.w();
        detail::im2col_chunk(xg, x.h(), x.w(), group_ch, stride, out_w, col0, ncols, buf.data());

        Eigen::Map<const detail::MatRM<T>> wmat(kernel.data() + static_cast<long>(g) * out_pg * k_g,
                                                out_pg, k_g);
        Eigen::Map<const detail::MatCM<T>> cols(buf.data(), k_g, ncols);
        Eigen::Map<detail::MatRM<T>, 0, Eigen::OuterStride<>> out(
            y.data() + (static_cast<long>(n) * out_ch + static_cast<long>(g) * out_pg) * out_hw +
                col0,
            out_pg, ncols, Eigen::OuterStride<>(out_hw));
        out.noalias() = wmat * cols;
        if (!bias.empty()) {
            for (int oc = 0; oc < out_pg; ++oc) {
                out.row(oc).array() += bias[static_cast<std::size_t>(g) * out_pg + oc];
            }
        }
    });
    return y;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvParamsT<T>& p) {
    if (p.padding != 1) {
        throw ShapeError("conv2d: padding must be 1, got " + std::to_string(p.padding));
    }
    return conv2d(x, p.kernel, std::span<const T>(p.bias), p.stride, p.groups);
}

template <typename T>
struct Conv2dGrads {
    TensorT<T> dx;
    TensorT<T> dkernel;
    std::vector<T> dbias;
};

// Gradients of conv2d w.r.t. input, kernel and bias. dkernel/dbias accumulate
// over samples in fixed batch order; dx is scattered per-sample sequentially,
// so results do not depend on the worker count.
template <typename T>
Conv2dGrads<T> conv2d_backward(const TensorT<T>& x, const TensorT<T>& kernel,
                               int stride, int groups, const TensorT<T>& dy) {
    detail::check_conv_args(x, kernel, std::span<const T>(), stride, groups);

    const int out_ch = kernel.n();
    const int group_ch = kernel.c();
    const int out_pg = out_ch / groups;
    const int out_h = dy.h();
    const int out_w = dy.w();
    const long out_hw = static_cast<long>(out_h) * out_w;
    const long k_g = static_cast<long>(group_ch) * 9;

    Conv2dGrads<T> g;
    g.dx = TensorT<T>(x.dims());
    g.dkernel = TensorT<T>(kernel.dims());
    g.dbias.assign(out_ch, T(0));

    // Per-sample kernel/bias partials, reduced in batch order afterwards.
    std::vector<std::vector<T>> dk_parts(x.n(), std::vector<T>(kernel.size(), T(0)));
    std::vector<std::vector<T>> db_parts(x.n(), std::vector<T>(out_ch, T(0)));

    parallel_tasks(static_cast<std::size_t>(x.n()), [&](std::size_t n) {
        thread_local std::vector<T> colbuf;
        thread_local std::vector<T> dcolbuf;
        for (int grp = 0; grp < groups; ++grp) {
            const T* xg = x.data() +
                          (static_cast<long>(n) * x.c() + static_cast<long>(grp) * group_ch) *
                              x.h() * x.w();
            T* dxg = g.dx.data() +
                     (static_cast<long>(n) * x.c() + static_cast<long>(grp) * group_ch) * x.h() *
                         x.w();
            const T* dyg = dy.data() +
                           (static_cast<long>(n) * out_ch + static_cast<long>(grp) * out_pg) *
                               out_hw;

            Eigen::Map<const detail::MatRM<T>> wmat(
                kernel.data() + static_cast<long>(grp) * out_pg * k_g, out_pg, k_g);
            Eigen::Map<detail::MatRM<T>> dwmat(
                dk_parts[n].data() + static_cast<long>(grp) * out_pg * k_g, out_pg, k_g);

            for (long col0 = 0; col0 < out_hw; col0 += detail::kConvColChunk) {
                const long ncols = std::min(detail::kConvColChunk, out_hw - col0);
                colbuf.resize(static_cast<std::size_t>(k_g) * ncols);
                dcolbuf.resize(static_cast<std::size_t>(k_g) * ncols);
                detail::im2col_chunk(xg, x.h(), x.w(), group_ch, stride, out_w, col0, ncols,
                                     colbuf.data());

                Eigen::Map<const detail::MatRM<T>, 0, Eigen::OuterStride<>> dyc(
                    dyg + col0, out_pg, ncols, Eigen::OuterStride<>(out_hw));
                Eigen::Map<const detail::MatCM<T>> cols(colbuf.data(), k_g, ncols);
                Eigen::Map<detail::MatCM<T>> dcols(dcolbuf.data(), k_g, ncols);

                dwmat.noalias() += dyc * cols.transpose();
                dcols.noalias() = wmat.transpose() * dyc;
                detail::col2im_add(dcolbuf.data(), x.h(), x.w(), group_ch, stride, out_w, col0,
                                   ncols, dxg);
                for (int oc = 0; oc < out_pg; ++oc) {
                    db_parts[n][static_cast<std::size_t>(grp) * out_pg + oc] += dyc.row(oc).sum();
                }
            }
        }
    });

    for (int n = 0; n < x.n(); ++n) {
        for (std::size_t i = 0; i < g.dkernel.size(); ++i) g.dkernel[i] += dk_parts[n][i];
        for (int oc = 0; oc < out_ch; ++oc) g.dbias[oc] += db_parts[n][oc];
    }
    return g;
}

template <typename T>
struct BatchNormResult {
    TensorT<T> y;
    // Batch statistics saved for the backward pass (training mode only).
    std::vector<T> mean;
    std::vector<T> inv_std;
};

// Per-channel normalization over (n, h, w). Training mode uses batch
// statistics (biased variance) and, when update_running is set, folds them
// into the running stats with the usual unbiased-variance EMA. Eval mode
// normalizes with the running stats. Statistics accumulate in double.
template <typename T>
BatchNormResult<T> batch_norm_forward(const TensorT<T>& x, std::span<const T> gamma,
                                      std::span<const T> beta, BatchNormParamsT<T>* stats,
                                      bool training, bool update_running) {
    const int c = x.c();
    if (static_cast<int>(gamma.size()) != c || static_cast<int>(beta.size()) != c ||
        stats->channels() != c) {
        throw ShapeError("batch_norm: parameter length " + std::to_string(gamma.size()) +
                         " does not match channels " + std::to_string(c));
    }
    const long plane = static_cast<long>(x.h()) * x.w();
    const long m = static_cast<long>(x.n()) * plane;

    BatchNormResult<T> r;
    r.y = TensorT<T>(x.dims());

    if (training) {
        if (m <= 1) {
            throw ShapeError("batch_norm: training mode needs n*h*w > 1 to define a variance");
        }
        r.mean.resize(c);
        r.inv_std.resize(c);
        for (int ch = 0; ch < c; ++ch) {
            double sum = 0.0;
            for (int n = 0; n < x.n(); ++n) {
                const T* p = x.data() + (static_cast<long>(n) * c + ch) * plane;
                for (long i = 0; i < plane; ++i) sum += p[i];
            }
            const double mu = sum / static_cast<double>(m);
            double sq = 0.0;
            for (int n = 0; n < x.n(); ++n) {
                const T* p = x.data() + (static_cast<long>(n) * c + ch) * plane;
                for (long i = 0; i < plane; ++i) {
                    const double d = p[i] - mu;
                    sq += d * d;
                }
            }
            const double var = sq / static_cast<double>(m);
            r.mean[ch] = static_cast<T>(mu);
            r.inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(stats->eps)));
            if (update_running) {
                const double unbiased = sq / static_cast<double>(m - 1);
                stats->running_mean[ch] = static_cast<T>(
                    (1.0 - stats->momentum) * stats->running_mean[ch] + stats->momentum * mu);
                stats->running_var[ch] = static_cast<T>(
                    (1.0 - stats->momentum) * stats->running_var[ch] + stats->momentum * unbiased);
            }
            const T a = gamma[ch] * r.inv_std[ch];
            const T b = beta[ch] - a * r.mean[ch];
            for (int n = 0; n < x.n(); ++n) {
                const T* p = x.data() + (static_cast<long>(n) * c + ch) * plane;
                T* q = r.y.data() + (static_cast<long>(n) * c + ch) * plane;
                for (long i = 0; i < plane; ++i) q[i] = a * p[i] + b;
            }
        }
    } else {
        for (int ch = 0; ch < c; ++ch) {
            const T inv = static_cast<T>(
                1.0 / std::sqrt(static_cast<double>(stats->running_var[ch]) +
                                static_cast<double>(stats->eps)));
            const T a = gamma[ch] * inv;
            const T b = beta[ch] - a * stats->running_mean[ch];
            for (int n = 0; n < x.n(); ++n) {
                const T* p = x.data() + (static_cast<long>(n) * c + ch) * plane;
                T* q = r.y.data() + (static_cast<long>(n) * c + ch) * plane;
                for (long i = 0; i < plane; ++i) q[i] = a * p[i] + b;
            }
        }
    }
    return r;
}

template <typename T>
TensorT<T> batch_norm(const TensorT<T>& x, BatchNormParamsT<T>& p, bool training) {
    return batch_norm_forward<T>(x, p.gamma, p.beta, &p, training, training).y;
}

template <typename T>
struct BatchNormGrads {
    TensorT<T> dx;
    std::vector<T> dgamma;
    std::vector<T> dbeta;
};

// Training-mode backward. The batch statistics are functions of x, so the
// gradient carries the usual mean/variance correction terms.
template <typename T>
BatchNormGrads<T> batch_norm_backward(const TensorT<T>& x, std::span<const T> gamma,
                                      const std::vector<T>& mean, const std::vector<T>& inv_std,
                                      const TensorT<T>& dy) {
    const int c = x.c();
    const long plane = static_cast<long>(x.h()) * x.w();
    const long m = static_cast<long>(x.n()) * plane;

    BatchNormGrads<T> g;
    g.dx = TensorT<T>(x.dims());
    g.dgamma.assign(c, T(0));
    g.dbeta.assign(c, T(0));

    for (int ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (int n = 0; n < x.n(); ++n) {
            const T* xp = x.data() + (static_cast<long>(n) * c + ch) * plane;
            const T* dp = dy.data() + (static_cast<long>(n) * c + ch) * plane;
            for (long i = 0; i < plane; ++i) {
                const double xhat = (xp[i] - mean[ch]) * inv_std[ch];
                sum_dy += dp[i];
                sum_dy_xhat += dp[i] * xhat;
            }
        }
        g.dbeta[ch] = static_cast<T>(sum_dy);
        g.dgamma[ch] = static_cast<T>(sum_dy_xhat);

        const double mean_dy = sum_dy / static_cast<double>(m);
        const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(m);
        const double a = gamma[ch] * inv_std[ch];
        for (int n = 0; n < x.n(); ++n) {
            const T* xp = x.data() + (static_cast<long>(n) * c + ch) * plane;
            const T* dp = dy.data() + (static_cast<long>(n) * c + ch) * plane;
            T* q = g.dx.data() + (static_cast<long>(n) * c + ch) * plane;
            for (long i = 0; i < plane; ++i) {
                const double xhat = (xp[i] - mean[ch]) * inv_std[ch];
                q[i] = static_cast<T>(a * (dp[i] - mean_dy - xhat * mean_dy_xhat));
            }
        }
    }
    return g;
}

// Eval-mode backward: the normalization is an affine map with fixed stats.
template <typename T>
BatchNormGrads<T> batch_norm_backward_eval(const TensorT<T>& x, std::span<const T> gamma,
                                           const BatchNormParamsT<T>& stats,
                                           const TensorT<T>& dy) {
    const int c = x.c();
    const long plane = static_cast<long>(x.h()) * x.w();

    BatchNormGrads<T> g;
    g.dx = TensorT<T>(x.dims());
    g.dgamma.assign(c, T(0));
    g.dbeta.assign(c, T(0));

    for (int ch = 0; ch < c; ++ch) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(stats.running_var[ch]) +
                                           static_cast<double>(stats.eps));
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        const double a = gamma[ch] * inv;
        for (int n = 0; n < x.n(); ++n) {
            const T* xp = x.data() + (static_cast<long>(n) * c + ch) * plane;
            const T* dp = dy.data() + (static_cast<long>(n) * c + ch) * plane;
            T* q = g.dx.data() + (static_cast<long>(n) * c + ch) * plane;
            for (long i = 0; i < plane; ++i) {
                const double xhat = (xp[i] - stats.running_mean[ch]) * inv;
                sum_dy += dp[i];
                sum_dy_xhat += dp[i] * xhat;
                q[i] = static_cast<T>(a * dp[i]);
            }
        }
        g.dbeta[ch] = static_cast<T>(sum_dy);
        g.dgamma[ch] = static_cast<T>(sum_dy_xhat);
    }
    return g;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
    TensorT<T> y(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
    return y;
}

template <typename T>
TensorT<T> relu_backward(const TensorT<T>& x, const TensorT<T>& dy) {
    TensorT<T> dx(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
    return dx;
}

// Repacks (n, 4c, h, w) -> (n, c, 2h, 2w): every output 2x2 block is built
// from four input channels, out[n,k,2i+di,2j+dj] = in[n,4k+2di+dj,i,j].
template <typename T>
TensorT<T> pixel_shuffle(const TensorT<T>& x) {
    if (x.c() % 4 != 0) {
        throw ShapeError("pixel_shuffle: channels must be divisible by 4, got " +
                         std::to_string(x.c()));
    }
    const int oc = x.c() / 4;
    TensorT<T> y(x.n(), oc, 2 * x.h(), 2 * x.w());
    for (int n = 0; n < x.n(); ++n) {
        for (int k = 0; k < oc; ++k) {
            for (int di = 0; di < 2; ++di) {
                for (int dj = 0; dj < 2; ++dj) {
                    const int ic = 4 * k + 2 * di + dj;
                    for (int i = 0; i < x.h(); ++i) {
                        const T* src = &x.at(n, ic, i, 0);
                        T* dst = &y.at(n, k, 2 * i + di, dj);
                        for (int j = 0; j < x.w(); ++j) dst[2 * j] = src[j];
                    }
                }
            }
        }
    }
    return y;
}

// Exact inverse of pixel_shuffle: (n, c, h, w) -> (n, 4c, h/2, w/2).
template <typename T>
TensorT<T> pixel_unshuffle(const TensorT<T>& x) {
    if (x.h() % 2 != 0 || x.w() % 2 != 0) {
        throw ShapeError("pixel_unshuffle: h and w must be even, got " + x.dims().str());
    }
    const int oh = x.h() / 2;
    const int ow = x.w() / 2;
    TensorT<T> y(x.n(), 4 * x.c(), oh, ow);
    for (int n = 0; n < x.n(); ++n) {
        for (int k = 0; k < x.c(); ++k) {
            for (int di = 0; di < 2; ++di) {
                for (int dj = 0; dj < 2; ++dj) {
                    const int oc = 4 * k + 2 * di + dj;
                    for (int i = 0; i < oh; ++i) {
                        const T* src = &x.at(n, k, 2 * i + di, dj);
                        T* dst = &y.at(n, oc, i, 0);
                        for (int j = 0; j < ow; ++j) dst[j] = src[2 * j];
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
TensorT<T> add(const TensorT<T>& x, const TensorT<T>& y) {
    require_same_dims(x, y, "add");
    TensorT<T> out(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& x, const TensorT<T>& y) {
    require_same_dims(x, y, "sub");
    TensorT<T> out(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    return out;
}

// Stacks the parts along the channel axis in argument order.
template <typename T>
TensorT<T> concat_channels(std::span<const TensorT<T>> parts) {
    if (parts.empty()) {
        throw ShapeError("concat_channels: needs at least one part");
    }
    int total_c = 0;
    for (const auto& p : parts) {
        if (p.n() != parts[0].n() || p.h() != parts[0].h() || p.w() != parts[0].w()) {
            throw ShapeError("concat_channels: spatial/batch mismatch, " + parts[0].dims().str() +
                             " vs " + p.dims().str());
        }
        total_c += p.c();
    }
    TensorT<T> y(parts[0].n(), total_c, parts[0].h(), parts[0].w());
    const long plane = static_cast<long>(parts[0].h()) * parts[0].w();
    for (int n = 0; n < parts[0].n(); ++n) {
        long ch_off = 0;
        for (const auto& p : parts) {
            const T* src = p.data() + static_cast<long>(n) * p.c() * plane;
            T* dst = y.data() + (static_cast<long>(n) * total_c + ch_off) * plane;
            std::copy(src, src + static_cast<long>(p.c()) * plane, dst);
            ch_off += p.c();
        }
    }
    return y;
}

template <typename T>
TensorT<T> concat_channels(std::initializer_list<const TensorT<T>*> parts) {
    std::vector<TensorT<T>> copies;
    copies.reserve(parts.size());
    for (const auto* p : parts) copies.push_back(*p);
    return concat_channels(std::span<const TensorT<T>>(copies));
}

// One-half of the per-element mean squared error, averaged over the batch.
// Equals (1/(2B)) * sum_batch mean_elements(||est - target||^2).
template <typename T>
T mse_loss(const TensorT<T>& estimate, const TensorT<T>& target) {
    require_same_dims(estimate, target, "mse_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double d = static_cast<double>(estimate[i]) - static_cast<double>(target[i]);
        acc += d * d;
    }
    return static_cast<T>(0.5 * acc / static_cast<double>(estimate.size()));
}

} // namespace fastdvd
