#pragma once

// Independent reference implementations the unit suites compare against.
// Everything here is written as plain nested loops or direct formulas, on
// purpose: the library must match these, never the other way around.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "gestformer/blocks.hpp"
#include "gestformer/rng.hpp"
#include "gestformer/tensor.hpp"

namespace oracle {

using gestformer::Rng;
using gestformer::Shape;
using gestformer::Tensor;

inline Tensor rnd(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(s));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    }
    return worst;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
    Tensor out = Tensor::zeros(Shape{M, N});
    for (std::int64_t i = 0; i < M; ++i) {
        for (std::int64_t j = 0; j < N; ++j) {
            double acc = 0.0;
            for (std::int64_t p = 0; p < K; ++p) acc += a.at(i, p) * b.at(p, j);
            out.at(i, j) = acc;
        }
    }
    return out;
}

inline Tensor depthwise(const Tensor& x, const Tensor& kernels) {
    const std::int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2), k = kernels.dim(1);
    const std::int64_t r = k / 2;
    Tensor out = Tensor::zeros(x.shape);
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t i = 0; i < H; ++i) {
            for (std::int64_t j = 0; j < W; ++j) {
                double acc = 0.0;
                for (std::int64_t u = 0; u < k; ++u) {
                    for (std::int64_t v = 0; v < k; ++v) {
                        const std::int64_t ii = i + u - r, jj = j + v - r;
                        if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
                        acc += x.at(c, ii, jj) * kernels.at(c, u, v);
                    }
                }
                out.at(c, i, j) = acc;
            }
        }
    }
    return out;
}

inline Tensor pointwise(const Tensor& x, const Tensor& w) {
    const std::int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2), Co = w.dim(0);
    Tensor out = Tensor::zeros(Shape{Co, H, W});
    for (std::int64_t o = 0; o < Co; ++o) {
        for (std::int64_t i = 0; i < H; ++i) {
            for (std::int64_t j = 0; j < W; ++j) {
                double acc = 0.0;
                for (std::int64_t c = 0; c < C; ++c) acc += w.at(o, c) * x.at(c, i, j);
                out.at(o, i, j) = acc;
            }
        }
    }
    return out;
}

inline Tensor avg_pool(const Tensor& x, int kernel) {
    const std::int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2), r = kernel / 2;
    Tensor out = Tensor::zeros(x.shape);
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t i = 0; i < H; ++i) {
            for (std::int64_t j = 0; j < W; ++j) {
                double acc = 0.0;
                std::int64_t cnt = 0;
                for (std::int64_t u = -r; u <= r; ++u) {
                    for (std::int64_t v = -r; v <= r; ++v) {
                        const std::int64_t ii = i + u, jj = j + v;
                        if (ii < 0 || ii >= H || jj < 0 || jj >= W) continue;
                        acc += x.at(c, ii, jj);
                        ++cnt;
                    }
                }
                out.at(c, i, j) = acc / static_cast<double>(cnt);
            }
        }
    }
    return out;
}

inline double gelu1(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = gelu1(v);
    return out;
}

inline Tensor layer_norm(const Tensor& x, const Tensor& sc, const Tensor& sh) {
    const std::int64_t rows = x.numel() / x.dim(x.rank() - 1);
    const std::int64_t k = x.dim(x.rank() - 1);
    Tensor out = x;
    for (std::int64_t i = 0; i < rows; ++i) {
        const double* row = x.data.data() + i * k;
        double mean = 0.0;
        for (std::int64_t j = 0; j < k; ++j) mean += row[j];
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (std::int64_t j = 0; j < k; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(k);
        const double inv = 1.0 / std::sqrt(var + 1e-5);
        for (std::int64_t j = 0; j < k; ++j) {
            out.data[i * k + j] = (row[j] - mean) * inv * sc[j] + sh[j];
        }
    }
    return out;
}

inline Tensor softmax(const Tensor& x) {
    const std::int64_t rows = x.numel() / x.dim(x.rank() - 1);
    const std::int64_t k = x.dim(x.rank() - 1);
    Tensor out = x;
    for (std::int64_t i = 0; i < rows; ++i) {
        double mx = x.data[i * k];
        for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, x.data[i * k + j]);
        double z = 0.0;
        for (std::int64_t j = 0; j < k; ++j) z += std::exp(x.data[i * k + j] - mx);
        for (std::int64_t j = 0; j < k; ++j) {
            out.data[i * k + j] = std::exp(x.data[i * k + j] - mx) / z;
        }
    }
    return out;
}

// Haar analysis on [C x H x W] with edge replication to even extents.
// Returns the four planes LL, LH, HL, HH in that order.
inline std::array<Tensor, 4> dwt2(const Tensor& x) {
    const std::int64_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const std::int64_t He = H + (H % 2), We = W + (W % 2);
    const auto px = [&](std::int64_t c, std::int64_t i, std::int64_t j) {
        return x.at(c, std::min(i, H - 1), std::min(j, W - 1));
    };
    const Shape bs{C, He / 2, We / 2};
    std::array<Tensor, 4> bands{Tensor::zeros(bs), Tensor::zeros(bs), Tensor::zeros(bs),
                                Tensor::zeros(bs)};
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t i = 0; i < He / 2; ++i) {
            for (std::int64_t j = 0; j < We / 2; ++j) {
                const double a = px(c, 2 * i, 2 * j), b = px(c, 2 * i, 2 * j + 1);
                const double cc = px(c, 2 * i + 1, 2 * j), d = px(c, 2 * i + 1, 2 * j + 1);
                bands[0].at(c, i, j) = (a + b + cc + d) / 2.0;
                bands[1].at(c, i, j) = (a - b + cc - d) / 2.0;
                bands[2].at(c, i, j) = (a + b - cc - d) / 2.0;
                bands[3].at(c, i, j) = (a - b - cc + d) / 2.0;
            }
        }
    }
    return bands;
}

inline Tensor idwt2(const std::array<Tensor, 4>& s, std::int64_t H, std::int64_t W) {
    const std::int64_t C = s[0].dim(0), bh = s[0].dim(1), bw = s[0].dim(2);
    Tensor out = Tensor::zeros(Shape{C, H, W});
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t i = 0; i < bh; ++i) {
            for (std::int64_t j = 0; j < bw; ++j) {
                const double ll = s[0].at(c, i, j), lh = s[1].at(c, i, j);
                const double hl = s[2].at(c, i, j), hh = s[3].at(c, i, j);
                const double a = (ll + lh + hl + hh) / 2.0;
                const double b = (ll - lh + hl - hh) / 2.0;
                const double cc = (ll + lh - hl - hh) / 2.0;
                const double d = (ll - lh - hl + hh) / 2.0;
                if (2 * i < H && 2 * j < W) out.at(c, 2 * i, 2 * j) = a;
                if (2 * i < H && 2 * j + 1 < W) out.at(c, 2 * i, 2 * j + 1) = b;
                if (2 * i + 1 < H && 2 * j < W) out.at(c, 2 * i + 1, 2 * j) = cc;
                if (2 * i + 1 < H && 2 * j + 1 < W) out.at(c, 2 * i + 1, 2 * j + 1) = d;
            }
        }
    }
    return out;
}

inline Tensor as_plane(const Tensor& f) {
    Tensor p = f;
    p.shape = Shape{1, f.dim(0), f.dim(1)};
    return p;
}

inline Tensor as_map(const Tensor& p) {
    Tensor f = p;
    f.shape = Shape{p.dim(1), p.dim(2)};
    return f;
}

inline Tensor add_channel_bias(const Tensor& x, double b) {
    Tensor out = x;
    for (double& v : out.data) v += b;
    return out;
}

inline Tensor wcp(const Tensor& f, const gestformer::WcpWeights& w) {
    auto bands = oracle::dwt2(as_plane(f));
    for (int i = 0; i < 4; ++i) {
        const auto& br = w.dc[static_cast<std::size_t>(i)];
        Tensor y = depthwise(bands[static_cast<std::size_t>(i)], br.dw);
        y = add_channel_bias(y, br.dw_bias[0]);
        y = pointwise(y, br.pw);
        bands[static_cast<std::size_t>(i)] = add_channel_bias(y, br.pw_bias[0]);
    }
    return as_map(oracle::idwt2(bands, f.dim(0), f.dim(1)));
}

inline Tensor msp(const Tensor& f) {
    const Tensor p = as_plane(f);
    const Tensor a = avg_pool(p, 3), b = avg_pool(p, 5), c = avg_pool(p, 7);
    Tensor out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (a.data[i] + b.data[i] + c.data[i]) / 3.0;
    }
    return as_map(out);
}

inline Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
    Tensor out = x;
    const std::int64_t k = x.dim(1);
    for (std::int64_t i = 0; i < x.dim(0); ++i) {
        for (std::int64_t j = 0; j < k; ++j) out.at(i, j) += bias[j];
    }
    return out;
}

inline Tensor gdfn(const Tensor& p, const gestformer::GdfnWeights& w) {
    // Qualified calls: the library declares same-named functions that
    // argument-dependent lookup would otherwise pull into the overload set.
    Tensor b1 = oracle::add_row_bias(oracle::matmul(p, w.p1_w), w.p1_b);
    b1 = as_map(oracle::add_channel_bias(depthwise(as_plane(b1), w.d1_w), w.d1_b[0]));
    b1 = oracle::gelu(b1);
    Tensor b2 = oracle::add_row_bias(oracle::matmul(p, w.p2_w), w.p2_b);
    b2 = as_map(oracle::add_channel_bias(depthwise(as_plane(b2), w.d2_w), w.d2_b[0]));
    Tensor gated = b1;
    for (std::size_t i = 0; i < gated.data.size(); ++i) gated.data[i] *= b2.data[i];
    Tensor out = oracle::add_row_bias(oracle::matmul(gated, w.p0_w), w.p0_b);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += p.data[i];
    return out;
}

} // namespace oracle
