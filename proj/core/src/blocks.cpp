#include "gestformer/blocks.hpp"

namespace gestformer {

WcpWeights WcpWeights::zeros() {
    WcpWeights w;
    for (auto& b : w.dc) {
        b.dw = Tensor::zeros(Shape{1, 3, 3});
        b.dw_bias = Tensor::zeros(Shape{1});
        b.pw = Tensor::zeros(Shape{1, 1});
        b.pw_bias = Tensor::zeros(Shape{1});
    }
    return w;
}

WcpWeights WcpWeights::identity() {
    WcpWeights w = zeros();
    for (auto& b : w.dc) {
        b.dw.at(0, 1, 1) = 1.0;
        b.pw[0] = 1.0;
    }
    return w;
}

GdfnWeights GdfnWeights::zeros(std::int64_t k, std::int64_t r) {
    const std::int64_t rk = r * k;
    GdfnWeights w;
    w.p1_w = Tensor::zeros(Shape{k, rk});
    w.p1_b = Tensor::zeros(Shape{rk});
    w.d1_w = Tensor::zeros(Shape{1, 3, 3});
    w.d1_b = Tensor::zeros(Shape{1});
    w.p2_w = Tensor::zeros(Shape{k, rk});
    w.p2_b = Tensor::zeros(Shape{rk});
    w.d2_w = Tensor::zeros(Shape{1, 3, 3});
    w.d2_b = Tensor::zeros(Shape{1});
    w.p0_w = Tensor::zeros(Shape{rk, k});
    w.p0_b = Tensor::zeros(Shape{k});
    return w;
}

FfnWeights FfnWeights::zeros(std::int64_t k, std::int64_t r) {
    const std::int64_t rk = r * k;
    FfnWeights w;
    w.p1_w = Tensor::zeros(Shape{k, rk});
    w.p1_b = Tensor::zeros(Shape{rk});
    w.p0_w = Tensor::zeros(Shape{rk, k});
    w.p0_b = Tensor::zeros(Shape{k});
    return w;
}

WcpVars bind(Tape& t, WcpWeights& w) {
    WcpVars v;
    for (int i = 0; i < 4; ++i) {
        v.dc[i] = {t.leaf(w.dc[i].dw), t.leaf(w.dc[i].dw_bias), t.leaf(w.dc[i].pw),
                   t.leaf(w.dc[i].pw_bias)};
    }
    return v;
}

GdfnVars bind(Tape& t, GdfnWeights& w) {
    return {t.leaf(w.p1_w), t.leaf(w.p1_b), t.leaf(w.d1_w), t.leaf(w.d1_b),
            t.leaf(w.p2_w), t.leaf(w.p2_b), t.leaf(w.d2_w), t.leaf(w.d2_b),
            t.leaf(w.p0_w), t.leaf(w.p0_b)};
}

FfnVars bind(Tape& t, FfnWeights& w) {
    return {t.leaf(w.p1_w), t.leaf(w.p1_b), t.leaf(w.p0_w), t.leaf(w.p0_b)};
}

WcpVars bind_const(Tape& t, const WcpWeights& w) {
    WcpVars v;
    for (int i = 0; i < 4; ++i) {
        v.dc[i] = {t.constant(w.dc[i].dw), t.constant(w.dc[i].dw_bias), t.constant(w.dc[i].pw),
                   t.constant(w.dc[i].pw_bias)};
    }
    return v;
}

GdfnVars bind_const(Tape& t, const GdfnWeights& w) {
    return {t.constant(w.p1_w), t.constant(w.p1_b), t.constant(w.d1_w), t.constant(w.d1_b),
            t.constant(w.p2_w), t.constant(w.p2_b), t.constant(w.d2_w), t.constant(w.d2_b),
            t.constant(w.p0_w), t.constant(w.p0_b)};
}

FfnVars bind_const(Tape& t, const FfnWeights& w) {
    return {t.constant(w.p1_w), t.constant(w.p1_b), t.constant(w.p0_w), t.constant(w.p0_b)};
}

namespace ad {

namespace {

// [m x k] <-> single-channel plane. Shapes are copied out of the tape
// before reshape appends to it.
Var as_plane(Tape& t, Var x) {
    const Shape s = t.value(x).shape;
    return reshape(t, x, Shape{1, s[0], s[1]});
}

Var as_map(Tape& t, Var x) {
    const Shape s = t.value(x).shape;
    return reshape(t, x, Shape{s[1], s[2]});
}

Var dc_apply(Tape& t, Var band, const DcBranchVars& b) {
    Var y = depthwise_conv2d(t, band, b.dw);
    y = add_channel_bias(t, y, b.dw_bias);
    y = pointwise_conv2d(t, y, b.pw);
    return add_channel_bias(t, y, b.pw_bias);
}

} // namespace

Var wcp_forward(Tape& t, Var f, const WcpVars& w) {
    const Shape s = t.value(f).shape;
    if (s.rank() != 2) throw DimensionError("wcp_forward: expected rank 2, got " + s.str());
    Var plane = as_plane(t, f);
    std::array<Var, 4> bands = dwt2(t, plane);
    for (int i = 0; i < 4; ++i) bands[i] = dc_apply(t, bands[i], w.dc[i]);
    Var out = idwt2(t, bands[0], bands[1], bands[2], bands[3], s[0], s[1]);
    return as_map(t, out);
}

Var msp_forward(Tape& t, Var x) {
    const Shape s = t.value(x).shape;
    if (s.rank() != 2) throw DimensionError("msp_forward: expected rank 2, got " + s.str());
    Var plane = as_plane(t, x);
    Var acc = avg_pool2d(t, plane, 3);
    acc = add(t, acc, avg_pool2d(t, plane, 5));
    acc = add(t, acc, avg_pool2d(t, plane, 7));
    return as_map(t, scale(t, acc, 1.0 / 3.0));
}

Var mwpa_forward(Tape& t, Var f, const WcpVars* w, MixerToggles cfg) {
    Var g = f;
    if (cfg.wcp) {
        if (!w) throw ContractError("mwpa_forward: wavelet toggle on but no weights supplied");
        g = wcp_forward(t, g, *w);
    }
    if (cfg.msp) return msp_forward(t, g);
    return as_map(t, avg_pool2d(t, as_plane(t, g), 3));
}

Var gdfn_forward(Tape& t, Var p, const GdfnVars& w) {
    Var b1 = add_row_bias(t, matmul(t, p, w.p1_w), w.p1_b);
    b1 = as_map(t, add_channel_bias(t, depthwise_conv2d(t, as_plane(t, b1), w.d1_w), w.d1_b));
    b1 = gelu(t, b1);
    Var b2 = add_row_bias(t, matmul(t, p, w.p2_w), w.p2_b);
    b2 = as_map(t, add_channel_bias(t, depthwise_conv2d(t, as_plane(t, b2), w.d2_w), w.d2_b));
    Var gated = mul(t, b1, b2);
    Var proj = add_row_bias(t, matmul(t, gated, w.p0_w), w.p0_b);
    return add(t, proj, p);
}

Var ffn_forward(Tape& t, Var p, const FfnVars& w) {
    Var h = gelu(t, add_row_bias(t, matmul(t, p, w.p1_w), w.p1_b));
    return add_row_bias(t, matmul(t, h, w.p0_w), w.p0_b);
}

} // namespace ad

Tensor wcp_forward(const Tensor& f, const WcpWeights& w) {
    Tape t;
    return t.value(ad::wcp_forward(t, t.constant(f), bind_const(t, w)));
}

Tensor msp_forward(const Tensor& x) {
    Tape t;
    return t.value(ad::msp_forward(t, t.constant(x)));
}

Tensor mwpa_forward(const Tensor& f, const WcpWeights& w, MixerToggles cfg) {
    Tape t;
    WcpVars v = bind_const(t, w);
    return t.value(ad::mwpa_forward(t, t.constant(f), &v, cfg));
}

Tensor gdfn_forward(const Tensor& p, const GdfnWeights& w) {
    Tape t;
    return t.value(ad::gdfn_forward(t, t.constant(p), bind_const(t, w)));
}

Tensor ffn_forward(const Tensor& p, const FfnWeights& w) {
    Tape t;
    return t.value(ad::ffn_forward(t, t.constant(p), bind_const(t, w)));
}

} // namespace gestformer
