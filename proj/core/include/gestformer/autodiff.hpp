#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gestformer/tensor.hpp"

namespace gestformer {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    std::uint32_t index = 0;
};

// Append-only reverse-mode tape. Creation order is a topological order, so
// the backward sweep is a single reverse pass. One tape per forward pass;
// independent tapes may run on separate threads.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf bound to an external tensor; backward() accumulates into its grad
    // slot. The tensor must outlive the tape.
    Var leaf(Tensor& t);

    // Leaf without gradient tracking.
    Var constant(Tensor t);

    const Tensor& value(Var v) const { return nodes_[v.index].value; }

    // Reverse sweep from a scalar node. Gradients add into bound leaf grad
    // slots, so two sweeps without zeroing accumulate exactly twice.
    void backward(Var loss);

    // Op-authoring interface: record a node whose backward closure reports
    // parent contributions through contribute().
    Var emit(Tensor value, BackwardFn back);

    // Only meaningful inside a backward sweep.
    void contribute(Var v, Tensor g);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        BackwardFn back;      // empty for leaves/constants
        Tensor* bound = nullptr;
    };
    std::vector<Node> nodes_;
    std::vector<std::optional<Tensor>> grads_; // scratch during backward
};

namespace ad {

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double s);
Var add_row_bias(Tape& t, Var x, Var bias);
Var add_channel_bias(Tape& t, Var x, Var bias);
Var gelu(Tape& t, Var x);
Var layer_norm(Tape& t, Var x, Var scale, Var shift);
Var softmax(Tape& t, Var x);
Var avg_pool2d(Tape& t, Var x, int kernel);
Var depthwise_conv2d(Tape& t, Var x, Var kernels);
Var pointwise_conv2d(Tape& t, Var x, Var weights);
Var mean_axis0(Tape& t, Var x);
Var sum_all(Tape& t, Var x); // scalar [1]
Var reshape(Tape& t, Var x, Shape s);

// Four analysis planes LL, LH, HL, HH of a [C x H x W] map.
std::array<Var, 4> dwt2(Tape& t, Var x);
Var idwt2(Tape& t, Var ll, Var lh, Var hl, Var hh, std::int64_t out_h, std::int64_t out_w);

// Mean over the batch of -log softmax(logits)[label]; scalar output.
Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels);

} // namespace ad

// Plain value of the loss for reporting; logits: [B x n].
double cross_entropy_value(const Tensor& logits, const std::vector<int>& labels);

} // namespace gestformer
