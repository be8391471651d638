#include "gestformer/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "gestformer/wavelet.hpp"

namespace gestformer {

Var Tape::leaf(Tensor& t) {
    nodes_.push_back(Node{t, nullptr, &t});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor t) {
    nodes_.push_back(Node{std::move(t), nullptr, nullptr});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::emit(Tensor value, BackwardFn back) {
    nodes_.push_back(Node{std::move(value), std::move(back), nullptr});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::contribute(Var v, Tensor g) {
    auto& slot = grads_[v.index];
    if (!slot) {
        slot = std::move(g);
        return;
    }
    if (slot->shape != g.shape) {
        throw DimensionError("gradient contribution shape " + g.shape.str() +
                             " does not match " + slot->shape.str());
    }
    double* dst = slot->data.data();
    const double* src = g.data.data();
    for (std::size_t i = 0; i < g.data.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
    const Tensor& lv = nodes_[loss.index].value;
    if (lv.numel() != 1) {
        throw ContractError("backward: loss must be scalar, got shape " + lv.shape.str());
    }
    grads_.assign(nodes_.size(), std::nullopt);
    grads_[loss.index] = Tensor::full(lv.shape, 1.0);
    for (std::uint32_t i = loss.index + 1; i-- > 0;) {
        if (!grads_[i]) continue;
        Node& node = nodes_[i];
        if (node.back) node.back(*this, *grads_[i]);
        if (node.bound) node.bound->accumulate_grad(grads_[i]->data);
        grads_[i].reset(); // release scratch as the sweep moves down
    }
    grads_.clear();
}

namespace ad {

namespace {

// a [M x K] times b^T with b [N x K] -> [M x N]
Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    Tensor out = Tensor::zeros({m, n});
    for (std::int64_t i = 0; i < m; ++i) {
        const double* arow = a.data.data() + i * k;
        double* orow = out.data.data() + i * n;
        for (std::int64_t j = 0; j < n; ++j) {
            const double* brow = b.data.data() + j * k;
            double acc = 0.0;
            for (std::int64_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
            orow[j] = acc;
        }
    }
    return out;
}

// a^T with a [K x M] times b [K x N] -> [M x N]
Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    const std::int64_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    Tensor out = Tensor::zeros({m, n});
    for (std::int64_t l = 0; l < k; ++l) {
        const double* arow = a.data.data() + l * m;
        const double* brow = b.data.data() + l * n;
        for (std::int64_t i = 0; i < m; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.data.data() + i * n;
            for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

} // namespace

Var matmul(Tape& t, Var a, Var b) {
    Tensor out = gestformer::matmul(t.value(a), t.value(b));
    return t.emit(std::move(out), [a, b](Tape& tp, const Tensor& g) {
        tp.contribute(a, matmul_nt(g, tp.value(b)));
        tp.contribute(b, matmul_tn(tp.value(a), g));
    });
}

Var add(Tape& t, Var a, Var b) {
    Tensor out = gestformer::add(t.value(a), t.value(b));
    return t.emit(std::move(out), [a, b](Tape& tp, const Tensor& g) {
        tp.contribute(a, g);
        tp.contribute(b, g);
    });
}

Var mul(Tape& t, Var a, Var b) {
    Tensor out = gestformer::mul(t.value(a), t.value(b));
    return t.emit(std::move(out), [a, b](Tape& tp, const Tensor& g) {
        tp.contribute(a, gestformer::mul(g, tp.value(b)));
        tp.contribute(b, gestformer::mul(g, tp.value(a)));
    });
}

Var scale(Tape& t, Var x, double s) {
    Tensor out = gestformer::scale(t.value(x), s);
    return t.emit(std::move(out), [x, s](Tape& tp, const Tensor& g) {
        tp.contribute(x, gestformer::scale(g, s));
    });
}

Var add_row_bias(Tape& t, Var x, Var bias) {
    Tensor out = gestformer::add_row_bias(t.value(x), t.value(bias));
    return t.emit(std::move(out), [x, bias](Tape& tp, const Tensor& g) {
        const std::int64_t m = g.dim(0), k = g.dim(1);
        Tensor db = Tensor::zeros({k});
        for (std::int64_t i = 0; i < m; ++i) {
            const double* row = g.data.data() + i * k;
            for (std::int64_t j = 0; j < k; ++j) db.data[static_cast<std::size_t>(j)] += row[j];
        }
        tp.contribute(x, g);
        tp.contribute(bias, std::move(db));
    });
}

Var add_channel_bias(Tape& t, Var x, Var bias) {
    Tensor out = gestformer::add_channel_bias(t.value(x), t.value(bias));
    return t.emit(std::move(out), [x, bias](Tape& tp, const Tensor& g) {
        const std::int64_t c = g.dim(0), plane = g.dim(1) * g.dim(2);
        Tensor db = Tensor::zeros({c});
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const double* p = g.data.data() + ch * plane;
            double acc = 0.0;
            for (std::int64_t i = 0; i < plane; ++i) acc += p[i];
            db.data[static_cast<std::size_t>(ch)] = acc;
        }
        tp.contribute(x, g);
        tp.contribute(bias, std::move(db));
    });
}

Var gelu(Tape& t, Var x) {
    Tensor out = gestformer::gelu(t.value(x));
    return t.emit(std::move(out), [x](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        Tensor dx = g;
        dx.grad.reset();
        for (std::size_t i = 0; i < dx.data.size(); ++i) {
            dx.data[i] *= gelu_grad_scalar(xv.data[i]);
        }
        tp.contribute(x, std::move(dx));
    });
}

Var layer_norm(Tape& t, Var x, Var sc, Var sh) {
    Tensor out = gestformer::layer_norm(t.value(x), t.value(sc), t.value(sh));
    return t.emit(std::move(out), [x, sc, sh](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        const Tensor& scale_v = tp.value(sc);
        const std::int64_t k = xv.dim(xv.rank() - 1);
        const std::int64_t rows = xv.numel() / k;
        Tensor dx = Tensor::zeros(xv.shape);
        Tensor dscale = Tensor::zeros(scale_v.shape);
        Tensor dshift = Tensor::zeros(scale_v.shape);
        std::vector<double> xhat(static_cast<std::size_t>(k));
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* xp = xv.data.data() + r * k;
            const double* gp = g.data.data() + r * k;
            double* dxp = dx.data.data() + r * k;
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
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::int64_t i = 0; i < k; ++i) {
                xhat[static_cast<std::size_t>(i)] = (xp[i] - mean) * inv;
                const double dxh = gp[i] * scale_v.data[static_cast<std::size_t>(i)];
                mean_dxhat += dxh;
                mean_dxhat_xhat += dxh * xhat[static_cast<std::size_t>(i)];
            }
            mean_dxhat /= static_cast<double>(k);
            mean_dxhat_xhat /= static_cast<double>(k);
            for (std::int64_t i = 0; i < k; ++i) {
                const double dxh = gp[i] * scale_v.data[static_cast<std::size_t>(i)];
                dxp[i] = inv * (dxh - mean_dxhat -
                                xhat[static_cast<std::size_t>(i)] * mean_dxhat_xhat);
                dscale.data[static_cast<std::size_t>(i)] +=
                    gp[i] * xhat[static_cast<std::size_t>(i)];
                dshift.data[static_cast<std::size_t>(i)] += gp[i];
            }
        }
        tp.contribute(x, std::move(dx));
        tp.contribute(sc, std::move(dscale));
        tp.contribute(sh, std::move(dshift));
    });
}

Var softmax(Tape& t, Var x) {
    Tensor out = gestformer::softmax(t.value(x));
    Var node = t.emit(out, [x](Tape& tp, const Tensor& g) {
        // dx = y * (g - sum(g*y)) per row; recompute y from x.
        const Tensor y = gestformer::softmax(tp.value(x));
        const std::int64_t k = y.dim(y.rank() - 1);
        const std::int64_t rows = y.numel() / k;
        Tensor dx = Tensor::zeros(y.shape);
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* yp = y.data.data() + r * k;
            const double* gp = g.data.data() + r * k;
            double* dxp = dx.data.data() + r * k;
            double dot = 0.0;
            for (std::int64_t i = 0; i < k; ++i) dot += gp[i] * yp[i];
            for (std::int64_t i = 0; i < k; ++i) dxp[i] = yp[i] * (gp[i] - dot);
        }
        tp.contribute(x, std::move(dx));
    });
    return node;
}

Var avg_pool2d(Tape& t, Var x, int kernel) {
    Tensor out = gestformer::avg_pool2d(t.value(x), kernel);
    return t.emit(std::move(out), [x, kernel](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        const std::int64_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
        const std::int64_t p = kernel / 2;
        Tensor dx = Tensor::zeros(xv.shape);
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const double* gp = g.data.data() + ch * h * w;
            double* dxp = dx.data.data() + ch * h * w;
            for (std::int64_t y = 0; y < h; ++y) {
                const std::int64_t y0 = std::max<std::int64_t>(0, y - p);
                const std::int64_t y1 = std::min<std::int64_t>(h - 1, y + p);
                for (std::int64_t xx = 0; xx < w; ++xx) {
                    const std::int64_t x0 = std::max<std::int64_t>(0, xx - p);
                    const std::int64_t x1 = std::min<std::int64_t>(w - 1, xx + p);
                    const double gv = gp[y * w + xx] /
                                      static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
                    for (std::int64_t sy = y0; sy <= y1; ++sy) {
                        for (std::int64_t sx = x0; sx <= x1; ++sx) dxp[sy * w + sx] += gv;
                    }
                }
            }
        }
        tp.contribute(x, std::move(dx));
    });
}

Var depthwise_conv2d(Tape& t, Var x, Var kernels) {
    Tensor out = gestformer::depthwise_conv2d(t.value(x), t.value(kernels));
    return t.emit(std::move(out), [x, kernels](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        const Tensor& kv = tp.value(kernels);
        const std::int64_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
        const std::int64_t ks = kv.dim(1);
        const std::int64_t p = ks / 2;
        Tensor dx = Tensor::zeros(xv.shape);
        Tensor dk = Tensor::zeros(kv.shape);
        for (std::int64_t ch = 0; ch < c; ++ch) {
            const double* xp = xv.data.data() + ch * h * w;
            const double* kp = kv.data.data() + ch * ks * ks;
            const double* gp = g.data.data() + ch * h * w;
            double* dxp = dx.data.data() + ch * h * w;
            double* dkp = dk.data.data() + ch * ks * ks;
            for (std::int64_t y = 0; y < h; ++y) {
                for (std::int64_t xx = 0; xx < w; ++xx) {
                    const double gv = gp[y * w + xx];
                    if (gv == 0.0) continue;
                    for (std::int64_t i = 0; i < ks; ++i) {
                        const std::int64_t sy = y + i - p;
                        if (sy < 0 || sy >= h) continue;
                        for (std::int64_t j = 0; j < ks; ++j) {
                            const std::int64_t sx = xx + j - p;
                            if (sx < 0 || sx >= w) continue;
                            dxp[sy * w + sx] += gv * kp[i * ks + j];
                            dkp[i * ks + j] += gv * xp[sy * w + sx];
                        }
                    }
                }
            }
        }
        tp.contribute(x, std::move(dx));
        tp.contribute(kernels, std::move(dk));
    });
}

Var pointwise_conv2d(Tape& t, Var x, Var weights) {
    Tensor out = gestformer::pointwise_conv2d(t.value(x), t.value(weights));
    return t.emit(std::move(out), [x, weights](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        const Tensor& wv = tp.value(weights);
        const std::int64_t ci = xv.dim(0), plane = xv.dim(1) * xv.dim(2);
        const std::int64_t co = wv.dim(0);
        Tensor dx = Tensor::zeros(xv.shape);
        Tensor dw = Tensor::zeros(wv.shape);
        for (std::int64_t oc = 0; oc < co; ++oc) {
            const double* gp = g.data.data() + oc * plane;
            for (std::int64_t ic = 0; ic < ci; ++ic) {
                const double wval = wv.data[static_cast<std::size_t>(oc * ci + ic)];
                const double* xp = xv.data.data() + ic * plane;
                double* dxp = dx.data.data() + ic * plane;
                double acc = 0.0;
                for (std::int64_t i = 0; i < plane; ++i) {
                    dxp[i] += wval * gp[i];
                    acc += gp[i] * xp[i];
                }
                dw.data[static_cast<std::size_t>(oc * ci + ic)] = acc;
            }
        }
        tp.contribute(x, std::move(dx));
        tp.contribute(weights, std::move(dw));
    });
}

Var mean_axis0(Tape& t, Var x) {
    Tensor out = gestformer::mean_axis0(t.value(x));
    return t.emit(std::move(out), [x](Tape& tp, const Tensor& g) {
        const Tensor& xv = tp.value(x);
        const std::int64_t m = xv.dim(0), k = xv.dim(1);
        Tensor dx = Tensor::zeros(xv.shape);
        for (std::int64_t i = 0; i < m; ++i) {
            double* row = dx.data.data() + i * k;
            for (std::int64_t j = 0; j < k; ++j) {
                row[j] = g.data[static_cast<std::size_t>(j)] / static_cast<double>(m);
            }
        }
        tp.contribute(x, std::move(dx));
    });
}

Var sum_all(Tape& t, Var x) {
    Tensor out = Tensor::scalar(gestformer::sum(t.value(x)));
    return t.emit(std::move(out), [x](Tape& tp, const Tensor& g) {
        tp.contribute(x, Tensor::full(tp.value(x).shape, g.data[0]));
    });
}

Var reshape(Tape& t, Var x, Shape s) {
    Tensor out = gestformer::reshape(t.value(x), s);
    return t.emit(std::move(out), [x](Tape& tp, const Tensor& g) {
        tp.contribute(x, gestformer::reshape(g, tp.value(x).shape));
    });
}

std::array<Var, 4> dwt2(Tape& t, Var x) {
    std::array<Var, 4> out;
    for (int b = 0; b < 4; ++b) {
        Tensor plane = gestformer::dwt2_band(t.value(x), b);
        out[static_cast<std::size_t>(b)] =
            t.emit(std::move(plane), [x, b](Tape& tp, const Tensor& g) {
                tp.contribute(x, dwt2_band_adjoint(g, b, tp.value(x).shape));
            });
    }
    return out;
}

Var idwt2(Tape& t, Var ll, Var lh, Var hl, Var hh, std::int64_t out_h, std::int64_t out_w) {
    Tensor out =
        idwt2_synth(t.value(ll), t.value(lh), t.value(hl), t.value(hh), out_h, out_w);
    const std::array<Var, 4> bands = {ll, lh, hl, hh};
    return t.emit(std::move(out), [bands](Tape& tp, const Tensor& g) {
        for (int b = 0; b < 4; ++b) {
            tp.contribute(bands[static_cast<std::size_t>(b)], idwt2_synth_adjoint_band(g, b));
        }
    });
}

Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels) {
    const Tensor& lv = t.value(logits);
    const double loss = cross_entropy_value(lv, labels);
    std::vector<int> labels_copy = labels;
    return t.emit(Tensor::scalar(loss), [logits, labels_copy](Tape& tp, const Tensor& g) {
        const Tensor& lv = tp.value(logits);
        const std::int64_t batch = lv.dim(0), n = lv.dim(1);
        const Tensor probs = gestformer::softmax(lv);
        const double gs = g.data[0] / static_cast<double>(batch);
        Tensor dl = Tensor::zeros(lv.shape);
        for (std::int64_t i = 0; i < batch; ++i) {
            const double* pp = probs.data.data() + i * n;
            double* dp = dl.data.data() + i * n;
            for (std::int64_t j = 0; j < n; ++j) dp[j] = gs * pp[j];
            dp[labels_copy[static_cast<std::size_t>(i)]] -= gs;
        }
        tp.contribute(logits, std::move(dl));
    });
}

} // namespace ad

double cross_entropy_value(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw DimensionError("cross_entropy: logits must be [B x n], got " + logits.shape.str());
    }
    const std::int64_t batch = logits.dim(0), n = logits.dim(1);
    if (static_cast<std::int64_t>(labels.size()) != batch) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                             " labels for batch of " + std::to_string(batch));
    }
    double total = 0.0;
    for (std::int64_t i = 0; i < batch; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= n) {
            throw InputError("cross_entropy: label " + std::to_string(label) +
                             " out of range [0, " + std::to_string(n) + ")");
        }
        const double* row = logits.data.data() + i * n;
        double mx = row[0];
        for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::int64_t j = 0; j < n; ++j) denom += std::exp(row[j] - mx);
        total += mx + std::log(denom) - row[label];
    }
    return total / static_cast<double>(batch);
}

} // namespace gestformer
