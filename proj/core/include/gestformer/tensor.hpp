#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gestformer/errors.hpp"

namespace gestformer {

struct Shape {
    std::vector<std::int64_t> dims;

    Shape() = default;
    Shape(std::initializer_list<std::int64_t> d) : dims(d) {}
    explicit Shape(std::vector<std::int64_t> d) : dims(std::move(d)) {}

    std::size_t rank() const { return dims.size(); }
    std::int64_t operator[](std::size_t i) const { return dims[i]; }
    std::int64_t numel() const;
    bool operator==(const Shape& o) const { return dims == o.dims; }
    bool operator!=(const Shape& o) const { return dims != o.dims; }

    // "[4x8x8]" — used in error messages.
    std::string str() const;
};

// Dense row-major double tensor with an optional gradient slot. The value
// type every module is built on; operations return fresh tensors.
class Tensor {
public:
    Shape shape;
    std::vector<double> data;
    std::optional<std::vector<double>> grad;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d);

    static Tensor zeros(Shape s);
    static Tensor full(Shape s, double value);
    static Tensor scalar(double value) { return full(Shape{1}, value); }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    std::int64_t dim(std::size_t i) const { return shape.dims[i]; }
    std::size_t rank() const { return shape.rank(); }

    double& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    // 2D / 3D accessors; callers guarantee the rank.
    double& at(std::int64_t i, std::int64_t j) {
        return data[static_cast<std::size_t>(i * shape.dims[1] + j)];
    }
    double at(std::int64_t i, std::int64_t j) const {
        return data[static_cast<std::size_t>(i * shape.dims[1] + j)];
    }
    double& at(std::int64_t c, std::int64_t h, std::int64_t w) {
        return data[static_cast<std::size_t>((c * shape.dims[1] + h) * shape.dims[2] + w)];
    }
    double at(std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data[static_cast<std::size_t>((c * shape.dims[1] + h) * shape.dims[2] + w)];
    }

    void ensure_grad();
    void zero_grad();
    void accumulate_grad(const std::vector<double>& g);

    bool all_finite() const;
};

inline constexpr double kLayerNormEps = 1e-5;

// --- primitives -----------------------------------------------------------

// Row-major matrix product, a: [M x K], b: [K x N].
Tensor matmul(const Tensor& a, const Tensor& b);

// Per-channel convolution with its own odd square kernel, zero same-padding.
// x: [C x H x W], kernels: [C x k x k]; output shape equals input shape.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernels);

// 1x1 convolution = per-pixel linear map across channels.
// x: [C x H x W], weights: [C' x C] -> [C' x H x W].
Tensor pointwise_conv2d(const Tensor& x, const Tensor& weights);

// Stride-1 average pooling with valid-count divisor: each output is the mean
// over the in-bounds window cells only, so constants survive at borders.
// kernel must be odd; output shape equals input shape.
Tensor avg_pool2d(const Tensor& x, int kernel);

// Exact Gaussian-CDF form x * Phi(x).
Tensor gelu(const Tensor& x);
double gelu_scalar(double x);
double gelu_grad_scalar(double x);

// Normalizes over the last axis (per-row mean 0, variance 1 before
// scale/shift); scale and shift have the last-axis extent.
Tensor layer_norm(const Tensor& x, const Tensor& scale, const Tensor& shift);

// Stable softmax over the last axis; rows sum to 1.
Tensor softmax(const Tensor& x);

// Elementwise and reduction primitives.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
// x: [m x k] + bias[k] broadcast over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
// x: [C x H x W] + bias[C] broadcast over each plane.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
// Mean over axis 0 of [m x k] -> [k].
Tensor mean_axis0(const Tensor& x);
double sum(const Tensor& x);

// Same data, new shape with equal element count.
Tensor reshape(const Tensor& x, Shape s);

} // namespace gestformer
