#pragma once

#include "fastdvd/errors.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace fastdvd {

struct Dims {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    bool operator==(const Dims&) const = default;

    std::size_t count() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }

    std::string str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }
};

// Dense 4-D array (batch, channels, height, width), row-major with w fastest.
// TensorT<float> is the production carrier; TensorT<double> exists for the
// high-precision gradient-check mode.
template <typename T>
class TensorT {
public:
    using value_type = T;

    TensorT() = default;

    TensorT(int n, int c, int h, int w) : dims_{n, c, h, w} {
        if (n < 1 || c < 1 || h < 1 || w < 1) {
            throw ShapeError("tensor dims must all be >= 1, got " + dims_.str());
        }
        data_.assign(dims_.count(), T(0));
    }

    explicit TensorT(Dims d) : TensorT(d.n, d.c, d.h, d.w) {}

    TensorT(Dims d, std::vector<T> data) : dims_(d), data_(std::move(data)) {
        if (d.n < 1 || d.c < 1 || d.h < 1 || d.w < 1) {
            throw ShapeError("tensor dims must all be >= 1, got " + d.str());
        }
        if (data_.size() != dims_.count()) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match dims " + dims_.str());
        }
    }

    static TensorT full(Dims d, T value) {
        TensorT t(d);
        for (auto& v : t.data_) v = value;
        return t;
    }

    const Dims& dims() const { return dims_; }
    int n() const { return dims_.n; }
    int c() const { return dims_.c; }
    int h() const { return dims_.h; }
    int w() const { return dims_.w; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
    const T& at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * dims_.c + c) * dims_.h + h) * dims_.w + w;
    }

    bool same_dims(const TensorT& other) const { return dims_ == other.dims_; }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(dims_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    Dims dims_{};
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <typename T>
void require_same_dims(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
    if (!a.same_dims(b)) {
        throw ShapeError(std::string(op) + ": dims mismatch, " + a.dims().str() +
                         " vs " + b.dims().str());
    }
}

} // namespace fastdvd
