#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcreg/vec3.hpp"

namespace pcreg {

// Handle to a vector-valued node on a Tape.
struct NodeRef {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Recorded computation graph of one forward pass, enabling reverse-mode
// differentiation of a scalar root with respect to the parameter vector the
// tape was opened on.
//
// Nodes are vector-valued with a small set of typed operations; values are
// evaluated eagerly into a contiguous arena, and the reverse pass walks the
// node list backwards with a switch per kind (no virtual dispatch). Weight
// matrices are not nodes: affine ops read directly from the parameter vector
// and write their gradient contributions straight into the caller's gradient
// buffer, which is always double precision.
//
// A tape may be consumed by backward() once; values stay readable afterwards.
class Tape {
  public:
    explicit Tape(std::span<const double> params) : params_(params) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    // ---- graph builders (eager evaluation) ----

    NodeRef constant(std::span<const double> v);
    NodeRef constant_vec3(const Vec3& v);

    // y = W x + b with W row-major (out_w x in_w) at w_offset and b (out_w)
    // at b_offset in the parameter vector.
    NodeRef affine(NodeRef x, std::size_t w_offset, std::size_t b_offset, int out_w);

    NodeRef tanh_act(NodeRef x);
    NodeRef relu_act(NodeRef x);

    // Component-wise maximum over nodes of equal width. Gradient is routed to
    // the first input attaining the maximum, in argument order.
    NodeRef max_pool(std::span<const NodeRef> xs);

    NodeRef dot(NodeRef a, NodeRef b);

    NodeRef concat(std::span<const NodeRef> xs);

    // Softmax over the components of one node.
    NodeRef softmax(NodeRef logits);

    // y = sum_i weights[i] * vs[i]; weights is a width-k node, vs are k nodes
    // of equal width.
    NodeRef weighted_sum(NodeRef weights, std::span<const NodeRef> vs);

    // y = bias + sum_i coeffs[i] * vs[i] with constant coefficients; bias may
    // be empty (zero) or match the node width.
    NodeRef lin_comb(std::span<const double> coeffs, std::span<const NodeRef> vs,
                     std::span<const double> bias = {});

    // Scalar sum of squared components.
    NodeRef sq_norm(NodeRef x);

    // ---- access ----

    int width(NodeRef n) const { return nodes_[n.id].width; }
    std::span<const double> value(NodeRef n) const {
        const Node& node = nodes_[n.id];
        return {val_.data() + node.val_off, static_cast<std::size_t>(node.width)};
    }
    double value_scalar(NodeRef n) const { return value(n)[0]; }
    Vec3 value_vec3(NodeRef n) const {
        auto v = value(n);
        return {v[0], v[1], v[2]};
    }
    std::size_t node_count() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    // Reverse pass seeding d(root) = seed; accumulates the parameter gradient
    // (+=) into param_grad, which must match the parameter vector length.
    // Throws std::logic_error if the tape was already consumed.
    void backward(NodeRef root, double seed, std::span<double> param_grad);

  private:
    enum class Op : std::uint8_t {
        kConst,
        kAffine,
        kTanh,
        kRelu,
        kMaxPool,
        kDot,
        kConcat,
        kSoftmax,
        kWeightedSum,
        kLinComb,
        kSqNorm,
    };

    struct Node {
        Op op;
        std::int32_t width;
        std::int64_t val_off;
        std::int32_t a = -1;        // primary input
        std::int32_t args_off = 0;  // variadic inputs in ints_
        std::int32_t args_len = 0;
        std::int64_t fpay_off = 0;  // coefficients / bias in fpay_
        std::int32_t fpay_len = 0;
        std::int64_t ipay_off = 0;  // affine offsets, max-pool winners in ints_ */
    };

    NodeRef push(Op op, int width);
    double* val_ptr(std::int32_t id) { return val_.data() + nodes_[id].val_off; }
    const double* val_ptr(std::int32_t id) const { return val_.data() + nodes_[id].val_off; }

    std::span<const double> params_;
    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> fpay_;
    std::vector<std::int64_t> ints_;
    bool consumed_ = false;
};

}  // namespace pcreg
