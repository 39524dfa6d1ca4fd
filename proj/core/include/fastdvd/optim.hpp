#pragma once

#include "fastdvd/errors.hpp"
#include "fastdvd/tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fastdvd {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// ADAM with bias correction. Moments are kept in double regardless of the
// parameter type so repeated steps track the textbook recurrence closely.
// One optimizer instance owns one step counter shared by all parameters.
template <typename T>
class AdamOptimizerT {
public:
    explicit AdamOptimizerT(AdamConfig cfg = {}) : cfg_(cfg) {}

    // One update over every named parameter. A parameter missing from
    // `grads` is treated as having zero gradient; a gradient whose size does
    // not match its parameter is an error.
    void step(std::span<const std::pair<std::string, std::span<T>>> params,
              const std::map<std::string, TensorT<T>>& grads, double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (const auto& [name, values] : params) {
            Slot& s = slots_[name];
            if (s.m.empty()) {
                s.m.assign(values.size(), 0.0);
                s.v.assign(values.size(), 0.0);
            } else if (s.m.size() != values.size()) {
                throw ShapeError("adam: parameter '" + name + "' changed size");
            }
            auto it = grads.find(name);
            const T* g = nullptr;
            if (it != grads.end()) {
                if (it->second.size() != values.size()) {
                    throw ShapeError("adam: gradient size " + std::to_string(it->second.size()) +
                                     " does not match parameter '" + name + "' size " +
                                     std::to_string(values.size()));
                }
                g = it->second.data();
            }
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double gi = g ? static_cast<double>(g[i]) : 0.0;
                s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * gi;
                s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * gi * gi;
                const double mhat = s.m[i] / bc1;
                const double vhat = s.v[i] / bc2;
                values[i] = static_cast<T>(static_cast<double>(values[i]) -
                                           lr * mhat / (std::sqrt(vhat) + cfg_.eps));
            }
        }
    }

    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    struct Slot {
        std::vector<double> m;
        std::vector<double> v;
    };

    AdamConfig cfg_;
    std::map<std::string, Slot> slots_;
    long t_ = 0;
};

using AdamOptimizer = AdamOptimizerT<float>;

// Piecewise-constant lookup: the rate of the last schedule entry whose
// start_epoch is <= epoch. The schedule must begin at epoch 0 with strictly
// increasing start epochs.
inline double lr_for_epoch(const std::vector<std::pair<int, double>>& schedule, int epoch) {
    if (schedule.empty() || schedule.front().first != 0) {
        throw ConfigError("lr schedule must start at epoch 0");
    }
    if (epoch < 0) {
        throw ConfigError("lr_for_epoch: epoch must be >= 0, got " + std::to_string(epoch));
    }
    double lr = schedule.front().second;
    int prev = -1;
    for (const auto& [start, rate] : schedule) {
        if (start <= prev) {
            throw ConfigError("lr schedule start epochs must be strictly increasing");
        }
        prev = start;
        if (epoch >= start) lr = rate;
    }
    return lr;
}

// Replaces the kernel's singular values by 1: the tensor is viewed as an
// (out_ch x in_pg*3*3) matrix W and W <- U*V^T from its SVD. Returns false
// (kernel untouched) when W is rank-deficient to machine precision.
template <typename T>
bool orthogonalize_kernel(TensorT<T>& kernel) {
    const int rows = kernel.n();
    const long cols = static_cast<long>(kernel.c()) * kernel.h() * kernel.w();
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            w(r, c) = static_cast<double>(kernel[static_cast<std::size_t>(r) * cols + c]);
        }
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double tol =
        static_cast<double>(std::max<long>(rows, cols)) * std::numeric_limits<double>::epsilon() *
        smax;
    if (smax == 0.0 || sv(sv.size() - 1) <= tol) {
        return false;
    }
    const Eigen::MatrixXd o = svd.matrixU() * svd.matrixV().transpose();
    for (int r = 0; r < rows; ++r) {
        for (long c = 0; c < cols; ++c) {
            kernel[static_cast<std::size_t>(r) * cols + c] = static_cast<T>(o(r, c));
        }
    }
    return true;
}

} // namespace fastdvd
