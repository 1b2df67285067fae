#include "pcreg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcreg {

NodeRef Tape::push(Op op, int width) {
    Node node;
    node.op = op;
    node.width = width;
    node.val_off = static_cast<std::int64_t>(val_.size());
    val_.resize(val_.size() + static_cast<std::size_t>(width));
    nodes_.push_back(node);
    return NodeRef{static_cast<std::int32_t>(nodes_.size() - 1)};
}

NodeRef Tape::constant(std::span<const double> v) {
    NodeRef r = push(Op::kConst, static_cast<int>(v.size()));
    std::copy(v.begin(), v.end(), val_ptr(r.id));
    return r;
}

NodeRef Tape::constant_vec3(const Vec3& v) {
    const double buf[3] = {v.x, v.y, v.z};
    return constant({buf, 3});
}

NodeRef Tape::affine(NodeRef x, std::size_t w_offset, std::size_t b_offset, int out_w) {
    const int in_w = width(x);
    NodeRef r = push(Op::kAffine, out_w);
    Node& node = nodes_[r.id];
    node.a = x.id;
    node.ipay_off = static_cast<std::int64_t>(ints_.size());
    ints_.push_back(static_cast<std::int64_t>(w_offset));
    ints_.push_back(static_cast<std::int64_t>(b_offset));

    const double* xs = val_ptr(x.id);
    double* y = val_ptr(r.id);
    const double* w = params_.data() + w_offset;
    const double* b = params_.data() + b_offset;
    for (int i = 0; i < out_w; ++i) {
        double acc = b[i];
        const double* row = w + static_cast<std::size_t>(i) * in_w;
        for (int j = 0; j < in_w; ++j) acc += row[j] * xs[j];
        y[i] = acc;
    }
    return r;
}

NodeRef Tape::tanh_act(NodeRef x) {
    NodeRef r = push(Op::kTanh, width(x));
    nodes_[r.id].a = x.id;
    const double* xs = val_ptr(x.id);
    double* y = val_ptr(r.id);
    for (int i = 0; i < nodes_[r.id].width; ++i) y[i] = std::tanh(xs[i]);
    return r;
}

NodeRef Tape::relu_act(NodeRef x) {
    NodeRef r = push(Op::kRelu, width(x));
    nodes_[r.id].a = x.id;
    const double* xs = val_ptr(x.id);
    double* y = val_ptr(r.id);
    for (int i = 0; i < nodes_[r.id].width; ++i) y[i] = xs[i] > 0.0 ? xs[i] : 0.0;
    return r;
}

NodeRef Tape::max_pool(std::span<const NodeRef> xs) {
    if (xs.empty()) throw std::invalid_argument("Tape::max_pool: no inputs");
    const int w = width(xs[0]);
    NodeRef r = push(Op::kMaxPool, w);
    Node& node = nodes_[r.id];
    node.args_off = static_cast<std::int32_t>(ints_.size());
    node.args_len = static_cast<std::int32_t>(xs.size());
    for (NodeRef x : xs) ints_.push_back(x.id);
    // Winner indices recorded after the argument list.
    node.ipay_off = static_cast<std::int64_t>(ints_.size());
    ints_.resize(ints_.size() + static_cast<std::size_t>(w));

    double* y = val_ptr(r.id);
    std::int64_t* winner = ints_.data() + node.ipay_off;
    for (int i = 0; i < w; ++i) {
        y[i] = val_ptr(xs[0].id)[i];
        winner[i] = 0;
    }
    for (std::size_t s = 1; s < xs.size(); ++s) {
        const double* v = val_ptr(xs[s].id);
        for (int i = 0; i < w; ++i) {
            if (v[i] > y[i]) {
                y[i] = v[i];
                winner[i] = static_cast<std::int64_t>(s);
            }
        }
    }
    return r;
}

NodeRef Tape::dot(NodeRef a, NodeRef b) {
    if (width(a) != width(b)) throw std::invalid_argument("Tape::dot: width mismatch");
    NodeRef r = push(Op::kDot, 1);
    Node& node = nodes_[r.id];
    node.a = a.id;
    node.args_off = static_cast<std::int32_t>(ints_.size());
    node.args_len = 1;
    ints_.push_back(b.id);
    const double* av = val_ptr(a.id);
    const double* bv = val_ptr(b.id);
    double acc = 0.0;
    for (int i = 0; i < width(a); ++i) acc += av[i] * bv[i];
    *val_ptr(r.id) = acc;
    return r;
}

NodeRef Tape::concat(std::span<const NodeRef> xs) {
    int w = 0;
    for (NodeRef x : xs) w += width(x);
    NodeRef r = push(Op::kConcat, w);
    Node& node = nodes_[r.id];
    node.args_off = static_cast<std::int32_t>(ints_.size());
    node.args_len = static_cast<std::int32_t>(xs.size());
    for (NodeRef x : xs) ints_.push_back(x.id);
    double* y = val_ptr(r.id);
    for (NodeRef x : xs) {
        const double* v = val_ptr(x.id);
        y = std::copy(v, v + width(x), y);
    }
    return r;
}

NodeRef Tape::softmax(NodeRef logits) {
    const int w = width(logits);
    NodeRef r = push(Op::kSoftmax, w);
    nodes_[r.id].a = logits.id;
    const double* x = val_ptr(logits.id);
    double* y = val_ptr(r.id);
    double mx = x[0];
    for (int i = 1; i < w; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (int i = 0; i < w; ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
    }
    for (int i = 0; i < w; ++i) y[i] /= sum;
    return r;
}

NodeRef Tape::weighted_sum(NodeRef weights, std::span<const NodeRef> vs) {
    if (static_cast<std::size_t>(width(weights)) != vs.size())
        throw std::invalid_argument("Tape::weighted_sum: weight count != value count");
    const int w = width(vs[0]);
    NodeRef r = push(Op::kWeightedSum, w);
    Node& node = nodes_[r.id];
    node.a = weights.id;
    node.args_off = static_cast<std::int32_t>(ints_.size());
    node.args_len = static_cast<std::int32_t>(vs.size());
    for (NodeRef v : vs) ints_.push_back(v.id);
    double* y = val_ptr(r.id);
    std::fill(y, y + w, 0.0);
    const double* wt = val_ptr(weights.id);
    for (std::size_t s = 0; s < vs.size(); ++s) {
        const double* v = val_ptr(vs[s].id);
        for (int i = 0; i < w; ++i) y[i] += wt[s] * v[i];
    }
    return r;
}

NodeRef Tape::lin_comb(std::span<const double> coeffs, std::span<const NodeRef> vs,
                       std::span<const double> bias) {
    if (coeffs.size() != vs.size())
        throw std::invalid_argument("Tape::lin_comb: coefficient count != node count");
    if (vs.empty() && bias.empty()) throw std::invalid_argument("Tape::lin_comb: empty");
    const int w = vs.empty() ? static_cast<int>(bias.size()) : width(vs[0]);
    if (!bias.empty() && static_cast<int>(bias.size()) != w)
        throw std::invalid_argument("Tape::lin_comb: bias width mismatch");

    NodeRef r = push(Op::kLinComb, w);
    Node& node = nodes_[r.id];
    node.args_off = static_cast<std::int32_t>(ints_.size());
    node.args_len = static_cast<std::int32_t>(vs.size());
    for (NodeRef v : vs) ints_.push_back(v.id);
    node.fpay_off = static_cast<std::int64_t>(fpay_.size());
    node.fpay_len = static_cast<std::int32_t>(coeffs.size());
    fpay_.insert(fpay_.end(), coeffs.begin(), coeffs.end());

    double* y = val_ptr(r.id);
    if (bias.empty()) {
        std::fill(y, y + w, 0.0);
    } else {
        std::copy(bias.begin(), bias.end(), y);
    }
    for (std::size_t s = 0; s < vs.size(); ++s) {
        const double c = coeffs[s];
        const double* v = val_ptr(vs[s].id);
        for (int i = 0; i < w; ++i) y[i] += c * v[i];
    }
    return r;
}

NodeRef Tape::sq_norm(NodeRef x) {
    NodeRef r = push(Op::kSqNorm, 1);
    nodes_[r.id].a = x.id;
    const double* v = val_ptr(x.id);
    double acc = 0.0;
    for (int i = 0; i < width(x); ++i) acc += v[i] * v[i];
    *val_ptr(r.id) = acc;
    return r;
}

void Tape::backward(NodeRef root, double seed, std::span<double> param_grad) {
    if (consumed_) throw std::logic_error("Tape::backward: tape already consumed");
    if (width(root) != 1) throw std::invalid_argument("Tape::backward: root must be scalar");
    consumed_ = true;

    std::vector<double> grad(val_.size(), 0.0);
    grad[nodes_[root.id].val_off] = seed;

    for (std::int32_t id = root.id; id >= 0; --id) {
        const Node& node = nodes_[id];
        const double* g = grad.data() + node.val_off;
        const int w = node.width;

        switch (node.op) {
        case Op::kConst:
            break;
        case Op::kAffine: {
            const int in_w = nodes_[node.a].width;
            const std::size_t w_off = static_cast<std::size_t>(ints_[node.ipay_off]);
            const std::size_t b_off = static_cast<std::size_t>(ints_[node.ipay_off + 1]);
            const double* xs = val_ptr(node.a);
            double* gx = grad.data() + nodes_[node.a].val_off;
            for (int i = 0; i < w; ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                const std::size_t row = w_off + static_cast<std::size_t>(i) * in_w;
                param_grad[b_off + static_cast<std::size_t>(i)] += gi;
                const double* wrow = params_.data() + row;
                double* gw = param_grad.data() + row;
                for (int j = 0; j < in_w; ++j) {
                    gw[j] += gi * xs[j];
                    gx[j] += gi * wrow[j];
                }
            }
            break;
        }
        case Op::kTanh: {
            const double* y = val_ptr(id);
            double* gx = grad.data() + nodes_[node.a].val_off;
            for (int i = 0; i < w; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
            break;
        }
        case Op::kRelu: {
            const double* xs = val_ptr(node.a);
            double* gx = grad.data() + nodes_[node.a].val_off;
            for (int i = 0; i < w; ++i)
                if (xs[i] > 0.0) gx[i] += g[i];
            break;
        }
        case Op::kMaxPool: {
            const std::int64_t* winner = ints_.data() + node.ipay_off;
            for (int i = 0; i < w; ++i) {
                const std::int64_t src = ints_[node.args_off + winner[i]];
                grad[nodes_[static_cast<std::int32_t>(src)].val_off + i] += g[i];
            }
            break;
        }
        case Op::kDot: {
            const std::int32_t b = static_cast<std::int32_t>(ints_[node.args_off]);
            const double* av = val_ptr(node.a);
            const double* bv = val_ptr(b);
            double* ga = grad.data() + nodes_[node.a].val_off;
            double* gb = grad.data() + nodes_[b].val_off;
            const double gs = g[0];
            for (int i = 0; i < nodes_[node.a].width; ++i) {
                ga[i] += gs * bv[i];
                gb[i] += gs * av[i];
            }
            break;
        }
        case Op::kConcat: {
            int off = 0;
            for (std::int32_t s = 0; s < node.args_len; ++s) {
                const std::int32_t src = static_cast<std::int32_t>(ints_[node.args_off + s]);
                double* gx = grad.data() + nodes_[src].val_off;
                const int sw = nodes_[src].width;
                for (int i = 0; i < sw; ++i) gx[i] += g[off + i];
                off += sw;
            }
            break;
        }
        case Op::kSoftmax: {
            const double* y = val_ptr(id);
            double* gx = grad.data() + nodes_[node.a].val_off;
            double dot_gy = 0.0;
            for (int i = 0; i < w; ++i) dot_gy += g[i] * y[i];
            for (int i = 0; i < w; ++i) gx[i] += y[i] * (g[i] - dot_gy);
            break;
        }
        case Op::kWeightedSum: {
            const double* wt = val_ptr(node.a);
            double* gw = grad.data() + nodes_[node.a].val_off;
            for (std::int32_t s = 0; s < node.args_len; ++s) {
                const std::int32_t src = static_cast<std::int32_t>(ints_[node.args_off + s]);
                const double* v = val_ptr(src);
                double* gv = grad.data() + nodes_[src].val_off;
                double acc = 0.0;
                for (int i = 0; i < w; ++i) {
                    acc += g[i] * v[i];
                    gv[i] += g[i] * wt[s];
                }
                gw[s] += acc;
            }
            break;
        }
        case Op::kLinComb: {
            for (std::int32_t s = 0; s < node.args_len; ++s) {
                const std::int32_t src = static_cast<std::int32_t>(ints_[node.args_off + s]);
                const double c = fpay_[node.fpay_off + s];
                double* gv = grad.data() + nodes_[src].val_off;
                for (int i = 0; i < w; ++i) gv[i] += c * g[i];
            }
            break;
        }
        case Op::kSqNorm: {
            const double* xs = val_ptr(node.a);
            double* gx = grad.data() + nodes_[node.a].val_off;
            const double gs = 2.0 * g[0];
            for (int i = 0; i < nodes_[node.a].width; ++i) gx[i] += gs * xs[i];
            break;
        }
        }
    }
}

}  // namespace pcreg
