#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "gestformer/autodiff.hpp"
#include "gestformer/tensor.hpp"

namespace gestformer {

// One wavelet-coefficient enhancement branch: depthwise 3x3 then pointwise
// 1->1, each with a bias, applied to a single-channel subband plane.
struct DcBranch {
    Tensor dw;      // [1 x 3 x 3]
    Tensor dw_bias; // [1]
    Tensor pw;      // [1 x 1]
    Tensor pw_bias; // [1]
};

// Four independent branches, one per subband in order LL, LH, HL, HH.
struct WcpWeights {
    std::array<DcBranch, 4> dc;

    static WcpWeights zeros();
    // Delta depthwise kernel and unit pointwise weight: every branch is the
    // identity, so the whole block reduces to a wavelet round-trip.
    static WcpWeights identity();
};

// Multiscale pooling is parameter-free; the kernel set and combine rule are
// fixed by design.
struct MspConfig {
    std::array<int, 3> kernels{3, 5, 7}; // stride 1, valid-count divisor
    // combine rule: arithmetic mean of the three pooled maps
};

struct MixerToggles {
    bool wcp = true;
    bool msp = true;
};

// Gated feed-forward: two parallel pointwise->depthwise branches, GELU on the
// first, elementwise product, pointwise projection back, residual add.
// Pointwise weights are stored matmul-ready as [in x out].
struct GdfnWeights {
    Tensor p1_w, p1_b; // [k x rk], [rk]
    Tensor d1_w, d1_b; // [1 x 3 x 3], [1]
    Tensor p2_w, p2_b; // [k x rk], [rk]
    Tensor d2_w, d2_b; // [1 x 3 x 3], [1]
    Tensor p0_w, p0_b; // [rk x k], [k]

    static GdfnWeights zeros(std::int64_t k, std::int64_t r);
};

// Plain two-layer feed-forward used when the gated variant is toggled off.
// No residual inside; the stage adds the skip.
struct FfnWeights {
    Tensor p1_w, p1_b; // [k x rk], [rk]
    Tensor p0_w, p0_b; // [rk x k], [k]

    static FfnWeights zeros(std::int64_t k, std::int64_t r);
};

// --- tape handles -----------------------------------------------------------

struct DcBranchVars {
    Var dw, dw_bias, pw, pw_bias;
};
struct WcpVars {
    std::array<DcBranchVars, 4> dc;
};
struct GdfnVars {
    Var p1_w, p1_b, d1_w, d1_b, p2_w, p2_b, d2_w, d2_b, p0_w, p0_b;
};
struct FfnVars {
    Var p1_w, p1_b, p0_w, p0_b;
};

// Leaf bindings accumulate gradients into the weight tensors.
WcpVars bind(Tape& t, WcpWeights& w);
GdfnVars bind(Tape& t, GdfnWeights& w);
FfnVars bind(Tape& t, FfnWeights& w);
// Constant bindings for inference-only passes.
WcpVars bind_const(Tape& t, const WcpWeights& w);
GdfnVars bind_const(Tape& t, const GdfnWeights& w);
FfnVars bind_const(Tape& t, const FfnWeights& w);

namespace ad {

// f: [m x k]. Analysis into four subbands, per-band DC enhancement,
// synthesis back to [m x k].
Var wcp_forward(Tape& t, Var f, const WcpVars& w);

// Mean of the stride-1 average pools with kernels 3, 5, 7.
Var msp_forward(Tape& t, Var x);

// Token mixer: wavelet part then pooling part. With the wavelet toggle off
// the input feeds the pooling directly; with the multiscale toggle off the
// pooling part is a single 3x3 average pool.
Var mwpa_forward(Tape& t, Var f, const WcpVars* w, MixerToggles cfg);

// p: [m x k]. out = proj(gelu(d1(p1(p))) * d2(p2(p))) + p.
Var gdfn_forward(Tape& t, Var p, const GdfnVars& w);

// p: [m x k]. out = p0(gelu(p1(p))), no residual.
Var ffn_forward(Tape& t, Var p, const FfnVars& w);

} // namespace ad

// --- plain forwards (throwaway tape under the hood) -------------------------

Tensor wcp_forward(const Tensor& f, const WcpWeights& w);
Tensor msp_forward(const Tensor& x);
Tensor mwpa_forward(const Tensor& f, const WcpWeights& w, MixerToggles cfg);
Tensor gdfn_forward(const Tensor& p, const GdfnWeights& w);
Tensor ffn_forward(const Tensor& p, const FfnWeights& w);

} // namespace gestformer
