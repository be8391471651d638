#include "gestformer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gestformer {

std::int64_t Shape::numel() const {
    std::int64_t n = 1;
    for (auto d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

std::string Shape::str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << 'x';
        os << dims[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    for (auto e : shape.dims) {
        if (e < 1) throw DimensionError("tensor extent must be >= 1, got shape " + shape.str());
    }
    if (static_cast<std::int64_t>(data.size()) != shape.numel()) {
        throw DimensionError("data length " + std::to_string(data.size()) +
                             " does not match shape " + shape.str());
    }
}

Tensor Tensor::zeros(Shape s) {
    auto n = s.numel();
    return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(Shape s, double value) {
    auto n = s.numel();
    return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), value));
}

void Tensor::ensure_grad() {
    if (!grad) grad.emplace(data.size(), 0.0);
}

void Tensor::zero_grad() {
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

void Tensor::accumulate_grad(const std::vector<double>& g) {
    if (g.size() != data.size()) {
        throw DimensionError("gradient length " + std::to_string(g.size()) +
                             " does not match tensor shape " + shape.str());
    }
    ensure_grad();
    double* dst = grad->data();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

namespace {

void require_rank(const Tensor& t, std::size_t r, const char* op) {
    if (t.rank() != r) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(r) +
                             " tensor, got shape " + t.shape.str());
    }
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw DimensionError("matmul: inner extents differ: " + a.shape.str() + " vs " +
                             b.shape.str());
    }
    Tensor out = Tensor::zeros({m, n});
    const double* pa = a.data.data();
    const double* pb = b.data.data();
    double* po = out.data.data();
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t l = 0; l < k; ++l) {
            const double av = pa[i * k + l];
            const double* brow = pb + l * n;
            double* orow = po + i * n;
            for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernels) {
    require_rank(x, 3, "depthwise_conv2d");
    require_rank(kernels, 3, "depthwise_conv2d");
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::int64_t kc = kernels.dim(0), kh = kernels.dim(1), kw = kernels.dim(2);
    if (kc != c) {
        throw DimensionError("depthwise_conv2d: channel counts differ: " + x.shape.str() +
                             " vs kernels " + kernels.shape.str());
    }
    if (kh != kw || kh % 2 == 0) {
        throw ConfigError("depthwise_conv2d: kernel must be odd and square, got " +
                          kernels.shape.str());
    }
    const std::int64_t p = kh / 2;
    Tensor out = Tensor::zeros(x.shape);
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const double* xp = x.data.data() + ch * h * w;
        const double* kp = kernels.data.data() + ch * kh * kw;
        double* op = out.data.data() + ch * h * w;
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t xx = 0; xx < w; ++xx) {
                double acc = 0.0;
                for (std::int64_t i = 0; i < kh; ++i) {
                    const std::int64_t sy = y + i - p;
                    if (sy < 0 || sy >= h) continue;
                    for (std::int64_t j = 0; j < kw; ++j) {
                        const std::int64_t sx = xx + j - p;
                        if (sx < 0 || sx >= w) continue;
                        acc += xp[sy * w + sx] * kp[i * kw + j];
                    }
                }
                op[y * w + xx] = acc;
            }
        }
    }
    return out;
}

Tensor pointwise_conv2d(const Tensor& x, const Tensor& weights) {
    require_rank(x, 3, "pointwise_conv2d");
    require_rank(weights, 2, "pointwise_conv2d");
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::int64_t co = weights.dim(0), ci = weights.dim(1);
    if (ci != c) {
        throw DimensionError("pointwise_conv2d: channel counts differ: input " + x.shape.str() +
                             " vs weights " + weights.shape.str());
    }
    const std::int64_t plane = h * w;
    Tensor out = Tensor::zeros({co, h, w});
    for (std::int64_t oc = 0; oc < co; ++oc) {
        double* op = out.data.data() + oc * plane;
        for (std::int64_t ic = 0; ic < c; ++ic) {
            const double wv = weights.data[static_cast<std::size_t>(oc * ci + ic)];
            if (wv == 0.0) continue;
            const double* xp = x.data.data() + ic * plane;
            for (std::int64_t i = 0; i < plane; ++i) op[i] += wv * xp[i];
        }
    }
    return out;
}

Tensor avg_pool2d(const Tensor& x, int kernel) {
    require_rank(x, 3, "avg_pool2d");
    if (kernel < 1 || kernel % 2 == 0) {
        throw ConfigError("avg_pool2d: kernel must be odd and positive, got " +
                          std::to_string(kernel));
    }
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::int64_t p = kernel / 2;
    Tensor out = Tensor::zeros(x.shape);
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const double* xp = x.data.data() + ch * h * w;
        double* op = out.data.data() + ch * h * w;
        for (std::int64_t y = 0; y < h; ++y) {
            const std::int64_t y0 = std::max<std::int64_t>(0, y - p);
            const std::int64_t y1 = std::min<std::int64_t>(h - 1, y + p);
            for (std::int64_t xx = 0; xx < w; ++xx) {
                const std::int64_t x0 = std::max<std::int64_t>(0, xx - p);
                const std::int64_t x1 = std::min<std::int64_t>(w - 1, xx + p);
                double acc = 0.0;
                for (std::int64_t sy = y0; sy <= y1; ++sy) {
                    for (std::int64_t sx = x0; sx <= x1; ++sx) acc += xp[sy * w + sx];
                }
                op[y * w + xx] = acc / static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
            }
        }
    }
    return out;
}

double gelu_scalar(double x) {
    // x * Phi(x), Phi the standard normal CDF.
    return x * 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
}

double gelu_grad_scalar(double x) {
    const double phi_cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
    const double phi_pdf = 0.39894228040143267794 * std::exp(-0.5 * x * x);
    return phi_cdf + x * phi_pdf;
}

Tensor gelu(const Tensor& x) {
    Tensor out = x;
    out.grad.reset();
    for (double& v : out.data) v = gelu_scalar(v);
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& scale, const Tensor& shift) {
    if (x.rank() < 1) throw DimensionError("layer_norm: rank >= 1 required");
    const std::int64_t k = x.dim(x.rank() - 1);
    if (scale.numel() != k || shift.numel() != k) {
        throw DimensionError("layer_norm: scale/shift must have extent " + std::to_string(k) +
                             ", got " + scale.shape.str() + " and " + shift.shape.str());
    }
    const std::int64_t rows = x.numel() / k;
    Tensor out = Tensor::zeros(x.shape);
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xp = x.data.data() + r * k;
        double* op = out.data.data() + r * k;
        double mean = 0.0;
        for (std::int64_t i = 0; i < k; ++i) mean += xp[i];
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (std::int64_t i = 0; i < k; ++i) {
            const double d = xp[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(k);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::int64_t i = 0; i < k; ++i) {
            op[i] = (xp[i] - mean) * inv * scale.data[static_cast<std::size_t>(i)] +
                    shift.data[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

Tensor softmax(const Tensor& x) {
    if (x.rank() < 1) throw DimensionError("softmax: rank >= 1 required");
    const std::int64_t k = x.dim(x.rank() - 1);
    const std::int64_t rows = x.numel() / k;
    Tensor out = Tensor::zeros(x.shape);
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* xp = x.data.data() + r * k;
        double* op = out.data.data() + r * k;
        double mx = xp[0];
        for (std::int64_t i = 1; i < k; ++i) mx = std::max(mx, xp[i]);
        double denom = 0.0;
        for (std::int64_t i = 0; i < k; ++i) {
            op[i] = std::exp(xp[i] - mx);
            denom += op[i];
        }
        for (std::int64_t i = 0; i < k; ++i) op[i] /= denom;
    }
    return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape) {
        throw DimensionError(std::string(op) + ": shapes differ: " + a.shape.str() + " vs " +
                             b.shape.str());
    }
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    out.grad.reset();
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    out.grad.reset();
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

Tensor scale(const Tensor& x, double s) {
    Tensor out = x;
    out.grad.reset();
    for (double& v : out.data) v *= s;
    return out;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
    require_rank(x, 2, "add_row_bias");
    const std::int64_t m = x.dim(0), k = x.dim(1);
    if (bias.numel() != k) {
        throw DimensionError("add_row_bias: bias " + bias.shape.str() + " does not match " +
                             x.shape.str());
    }
    Tensor out = x;
    out.grad.reset();
    for (std::int64_t i = 0; i < m; ++i) {
        double* row = out.data.data() + i * k;
        for (std::int64_t j = 0; j < k; ++j) row[j] += bias.data[static_cast<std::size_t>(j)];
    }
    return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
    require_rank(x, 3, "add_channel_bias");
    const std::int64_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
    if (bias.numel() != c) {
        throw DimensionError("add_channel_bias: bias " + bias.shape.str() + " does not match " +
                             x.shape.str());
    }
    Tensor out = x;
    out.grad.reset();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        double* p = out.data.data() + ch * plane;
        const double bv = bias.data[static_cast<std::size_t>(ch)];
        for (std::int64_t i = 0; i < plane; ++i) p[i] += bv;
    }
    return out;
}

Tensor mean_axis0(const Tensor& x) {
    require_rank(x, 2, "mean_axis0");
    const std::int64_t m = x.dim(0), k = x.dim(1);
    Tensor out = Tensor::zeros({k});
    for (std::int64_t i = 0; i < m; ++i) {
        const double* row = x.data.data() + i * k;
        for (std::int64_t j = 0; j < k; ++j) out.data[static_cast<std::size_t>(j)] += row[j];
    }
    for (double& v : out.data) v /= static_cast<double>(m);
    return out;
}

double sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data) s += v;
    return s;
}

Tensor reshape(const Tensor& x, Shape s) {
    if (s.numel() != x.numel()) {
        throw DimensionError("reshape: element counts differ: " + x.shape.str() + " vs " +
                             s.str());
    }
    Tensor out = x;
    out.grad.reset();
    out.shape = std::move(s);
    return out;
}

} // namespace gestformer
