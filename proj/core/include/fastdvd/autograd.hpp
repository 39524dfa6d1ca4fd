#pragma once

#include "fastdvd/kernels.hpp"
#include "fastdvd/tensor.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fastdvd {

// Define-by-run reverse-mode tape. Ops execute immediately through the
// tensor kernels and record what backward() needs. Nodes are appended in
// execution order, so every node's inputs precede it and a single reverse
// sweep visits each node exactly once.
//
// Batch normalization is recorded in training mode (batch statistics);
// inference does not need a tape.
template <typename T>
class GraphT {
public:
    using NodeId = std::size_t;

    // Leaf without gradient tracking.
    NodeId constant(TensorT<T> value) {
        return push(Node{Op::leaf, {}, std::move(value), false});
    }

    // Leaf whose gradient backward() reports under `name`. Each name may be
    // introduced once; weight sharing is expressed by reusing the NodeId.
    NodeId param(const std::string& name, TensorT<T> value) {
        if (param_ids_.count(name)) {
            throw Error("graph: parameter '" + name + "' introduced twice");
        }
        NodeId id = push(Node{Op::leaf, {}, std::move(value), true});
        nodes_[id].name = name;
        param_ids_.emplace(name, id);
        return id;
    }

    NodeId conv2d(NodeId x, NodeId kernel, NodeId bias, int stride, int groups) {
        const auto& k = val(kernel);
        const auto& b = val(bias);
        if (b.size() != static_cast<std::size_t>(k.n())) {
            throw ShapeError("graph conv2d: bias node size " + std::to_string(b.size()) +
                             " does not match out_channels " + std::to_string(k.n()));
        }
        TensorT<T> y = fastdvd::conv2d<T>(val(x), k, std::span<const T>(b.data(), b.size()),
                                          stride, groups);
        Node n{Op::conv, {x, kernel, bias}, std::move(y)};
        n.stride = stride;
        n.groups = groups;
        return push(std::move(n));
    }

    // Training-mode normalization. `stats` supplies eps and receives the
    // running-stat update when `update_running` is set; gradients flow to
    // x, gamma and beta only.
    NodeId batch_norm(NodeId x, NodeId gamma, NodeId beta, BatchNormParamsT<T>* stats,
                      bool update_running) {
        const auto& g = val(gamma);
        const auto& b = val(beta);
        auto r = batch_norm_forward<T>(val(x), std::span<const T>(g.data(), g.size()),
                                       std::span<const T>(b.data(), b.size()), stats, true,
                                       update_running);
        Node n{Op::bnorm, {x, gamma, beta}, std::move(r.y)};
        n.bn_mean = std::move(r.mean);
        n.bn_inv_std = std::move(r.inv_std);
        return push(std::move(n));
    }

    NodeId relu(NodeId x) { return push(Node{Op::relu, {x}, fastdvd::relu(val(x))}); }

    NodeId pixel_shuffle(NodeId x) {
        return push(Node{Op::shuffle, {x}, fastdvd::pixel_shuffle(val(x))});
    }

    NodeId pixel_unshuffle(NodeId x) {
        return push(Node{Op::unshuffle, {x}, fastdvd::pixel_unshuffle(val(x))});
    }

    NodeId add(NodeId a, NodeId b) {
        return push(Node{Op::add, {a, b}, fastdvd::add(val(a), val(b))});
    }

    NodeId sub(NodeId a, NodeId b) {
        return push(Node{Op::sub, {a, b}, fastdvd::sub(val(a), val(b))});
    }

    NodeId concat(std::span<const NodeId> parts) {
        std::vector<TensorT<T>> vals;
        vals.reserve(parts.size());
        for (NodeId p : parts) vals.push_back(val(p));
        Node n{Op::concat, {parts.begin(), parts.end()},
               concat_channels(std::span<const TensorT<T>>(vals))};
        return push(std::move(n));
    }

    NodeId sum(NodeId x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < val(x).size(); ++i) acc += val(x)[i];
        TensorT<T> s(1, 1, 1, 1);
        s[0] = static_cast<T>(acc);
        return push(Node{Op::sum, {x}, std::move(s)});
    }

    NodeId mse_loss(NodeId estimate, NodeId target) {
        TensorT<T> s(1, 1, 1, 1);
        s[0] = fastdvd::mse_loss(val(estimate), val(target));
        return push(Node{Op::mse, {estimate, target}, std::move(s)});
    }

    const TensorT<T>& value(NodeId id) const { return nodes_.at(id).value; }
    std::size_t node_count() const { return nodes_.size(); }

    std::vector<Dims> node_dims() const {
        std::vector<Dims> out;
        out.reserve(nodes_.size());
        for (const Node& n : nodes_) out.push_back(n.value.dims());
        return out;
    }

    void clear() {
        nodes_.clear();
        param_ids_.clear();
    }

    // Reverse sweep from a scalar loss node. Returns dLoss/dParam for every
    // named parameter (zero tensors included). The tape stays valid.
    std::map<std::string, TensorT<T>> backward(NodeId loss) const {
        if (val(loss).size() != 1) {
            throw ShapeError("backward: loss must be scalar, got " + val(loss).dims().str());
        }
        std::vector<std::optional<TensorT<T>>> grad(nodes_.size());
        grad[loss] = TensorT<T>::full(Dims{1, 1, 1, 1}, T(1));

        for (std::size_t i = nodes_.size(); i-- > 0;) {
            const Node& n = nodes_[i];
            if (!grad[i] || !n.requires_grad || n.op == Op::leaf) continue;
            const TensorT<T>& dy = *grad[i];
            switch (n.op) {
            case Op::conv: {
                auto g = conv2d_backward<T>(val(n.inputs[0]), val(n.inputs[1]), n.stride,
                                            n.groups, dy);
                accumulate(grad, n.inputs[0], std::move(g.dx));
                accumulate(grad, n.inputs[1], std::move(g.dkernel));
                const int bias_len = static_cast<int>(g.dbias.size());
                accumulate(grad, n.inputs[2],
                           TensorT<T>(Dims{1, bias_len, 1, 1}, std::move(g.dbias)));
                break;
            }
            case Op::bnorm: {
                const auto& gamma = val(n.inputs[1]);
                auto g = batch_norm_backward<T>(val(n.inputs[0]),
                                                std::span<const T>(gamma.data(), gamma.size()),
                                                n.bn_mean, n.bn_inv_std, dy);
                accumulate(grad, n.inputs[0], std::move(g.dx));
                const int c = static_cast<int>(g.dgamma.size());
                accumulate(grad, n.inputs[1], TensorT<T>(Dims{1, c, 1, 1}, std::move(g.dgamma)));
                accumulate(grad, n.inputs[2], TensorT<T>(Dims{1, c, 1, 1}, std::move(g.dbeta)));
                break;
            }
            case Op::relu:
                accumulate(grad, n.inputs[0], relu_backward(val(n.inputs[0]), dy));
                break;
            case Op::shuffle:
                accumulate(grad, n.inputs[0], fastdvd::pixel_unshuffle(dy));
                break;
            case Op::unshuffle:
                accumulate(grad, n.inputs[0], fastdvd::pixel_shuffle(dy));
                break;
            case Op::add:
                accumulate(grad, n.inputs[0], dy);
                accumulate(grad, n.inputs[1], dy);
                break;
            case Op::sub: {
                accumulate(grad, n.inputs[0], dy);
                TensorT<T> neg(dy.dims());
                for (std::size_t j = 0; j < dy.size(); ++j) neg[j] = -dy[j];
                accumulate(grad, n.inputs[1], std::move(neg));
                break;
            }
            case Op::concat: {
                const long plane = static_cast<long>(dy.h()) * dy.w();
                long ch_off = 0;
                for (NodeId in : n.inputs) {
                    const auto& part = val(in);
                    TensorT<T> dpart(part.dims());
                    for (int b = 0; b < dy.n(); ++b) {
                        const T* src = dy.data() +
                                       (static_cast<long>(b) * dy.c() + ch_off) * plane;
                        T* dst = dpart.data() + static_cast<long>(b) * part.c() * plane;
                        std::copy(src, src + static_cast<long>(part.c()) * plane, dst);
                    }
                    accumulate(grad, in, std::move(dpart));
                    ch_off += part.c();
                }
                break;
            }
            case Op::sum: {
                TensorT<T> dx = TensorT<T>::full(val(n.inputs[0]).dims(), dy[0]);
                accumulate(grad, n.inputs[0], std::move(dx));
                break;
            }
            case Op::mse: {
                const auto& est = val(n.inputs[0]);
                const auto& tgt = val(n.inputs[1]);
                const T scale = dy[0] / static_cast<T>(est.size());
                TensorT<T> dest(est.dims());
                for (std::size_t j = 0; j < est.size(); ++j) {
                    dest[j] = scale * (est[j] - tgt[j]);
                }
                if (nodes_[n.inputs[1]].requires_grad) {
                    TensorT<T> dtgt(tgt.dims());
                    for (std::size_t j = 0; j < tgt.size(); ++j) dtgt[j] = -dest[j];
                    accumulate(grad, n.inputs[1], std::move(dtgt));
                }
                accumulate(grad, n.inputs[0], std::move(dest));
                break;
            }
            case Op::leaf:
                break;
            }
        }

        std::map<std::string, TensorT<T>> out;
        for (const auto& [name, id] : param_ids_) {
            out.emplace(name, grad[id] ? std::move(*grad[id]) : TensorT<T>(val(id).dims()));
        }
        return out;
    }

private:
    enum class Op { leaf, conv, bnorm, relu, shuffle, unshuffle, add, sub, concat, sum, mse };

    struct Node {
        Op op;
        std::vector<NodeId> inputs;
        TensorT<T> value;
        bool requires_grad = false;
        int stride = 1;
        int groups = 1;
        std::vector<T> bn_mean;
        std::vector<T> bn_inv_std;
        std::string name;
    };

    NodeId push(Node n) {
        if (n.op != Op::leaf) {
            for (NodeId in : n.inputs) {
                if (in >= nodes_.size()) {
                    throw Error("graph: input node id out of range");
                }
                n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
            }
        }
        nodes_.push_back(std::move(n));
        return nodes_.size() - 1;
    }

    const TensorT<T>& val(NodeId id) const { return nodes_.at(id).value; }

    static void accumulate(std::vector<std::optional<TensorT<T>>>& grad, NodeId id,
                           TensorT<T> piece) {
        if (!grad[id]) {
            grad[id] = std::move(piece);
        } else {
            TensorT<T>& acc = *grad[id];
            require_same_dims(acc, piece, "grad accumulate");
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += piece[i];
        }
    }

    std::vector<Node> nodes_;
    std::map<std::string, NodeId> param_ids_;
};

using Graph = GraphT<float>;

} // namespace fastdvd
