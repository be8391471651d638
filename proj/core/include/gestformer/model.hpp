#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gestformer/blocks.hpp"
#include "gestformer/rng.hpp"
#include "gestformer/tensor.hpp"

namespace gestformer {

struct ModelConfig {
    std::int64_t m = 40;  // sequence length
    std::int64_t d_in = 16;
    std::int64_t k = 32;  // embedding width
    std::int64_t stages = 6;
    std::int64_t n = 3;  // classes
    std::int64_t r = 2;  // feed-forward expansion

    // Ablation toggles: multiscale pooling, wavelet processing, gated
    // feed-forward, depthwise embedding conv. All on = the full model;
    // all off = the plain pooling baseline.
    bool msp = true;
    bool wcp = true;
    bool gdfn = true;
    bool embedding = true;

    MixerToggles mixer() const { return {wcp, msp}; }
    void validate() const; // ConfigError on out-of-range fields
    bool operator==(const ModelConfig&) const = default;
};

struct DepthwisePair {
    Tensor w; // [1 x 3 x 3]
    Tensor b; // [1]
};

struct EmbedWeights {
    Tensor proj_w; // [d_in x k]
    Tensor proj_b; // [k]
    std::optional<DepthwisePair> dconv; // present iff cfg.embedding
};

struct BlockWeights {
    Tensor norm1_scale, norm1_shift; // [k]
    std::optional<WcpWeights> wcp;   // present iff cfg.wcp
    Tensor norm2_scale, norm2_shift; // [k]
    std::optional<GdfnWeights> gdfn; // present iff cfg.gdfn
    std::optional<FfnWeights> ffn;   // present iff !cfg.gdfn
};

// The full stack: embedding, fixed positional table, the block stages, mean
// pooling over the sequence, linear classifier.
struct GestFormerModel {
    ModelConfig config;
    EmbedWeights embed;
    Tensor pos; // [m x k], fixed sinusoidal, not learnable
    std::vector<BlockWeights> stages;
    Tensor cls_w; // [k x n]
    Tensor cls_b; // [n]

    // Learnable tensors in canonical order with stable dotted names
    // ("stage0.wcp.dc1.dw.weight", "classifier.bias", ...).
    std::vector<std::pair<std::string, Tensor*>> named_params();
    std::vector<std::pair<std::string, const Tensor*>> named_params() const;
    std::vector<Tensor*> params();

    void zero_grads();
};

// PE[t, 2i] = sin(t / 10000^{2i/k}), PE[t, 2i+1] = cos of the same angle.
Tensor positional_encoding(std::int64_t m, std::int64_t k);

// Deterministic init: weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)),
// biases zero, norm scales one, shifts zero.
GestFormerModel init_weights(const ModelConfig& cfg, std::uint64_t seed);

// Skeleton with all-zero parameters (checkpoint loading, tests).
GestFormerModel zero_weights(const ModelConfig& cfg);

namespace ad {

struct StageVars {
    Var norm1_scale, norm1_shift;
    std::optional<WcpVars> wcp;
    Var norm2_scale, norm2_shift;
    std::optional<GdfnVars> gdfn;
    std::optional<FfnVars> ffn;
};

struct ModelVars {
    Var proj_w, proj_b;
    std::optional<Var> dconv_w, dconv_b;
    Var pos; // constant
    std::vector<StageVars> stages;
    Var cls_w, cls_b;
};

StageVars bind(Tape& t, BlockWeights& stage);
StageVars bind_const(Tape& t, const BlockWeights& stage);
ModelVars bind(Tape& t, GestFormerModel& model);
ModelVars bind_const(Tape& t, const GestFormerModel& model);

// f: [m x d_in] -> [m x k]; projection plus optional depthwise conv. The
// positional table is added by the caller.
Var spatial_embed(Tape& t, Var f, const ModelVars& mv, const ModelConfig& cfg);

// y = x + MWPA(LN1(x)); out = y + FF(LN2(y)) where FF is the gated or the
// plain feed-forward depending on the toggle.
Var mwpt_stage(Tape& t, Var x, const StageVars& sv, const ModelConfig& cfg);

// Full stack up to the classifier; returns a [1 x n] logits row.
Var model_logits(Tape& t, Var f, const ModelVars& mv, const ModelConfig& cfg);

} // namespace ad

// Plain forwards over a frozen model.
Tensor spatial_embed(const Tensor& f, const GestFormerModel& model);
Tensor mwpt_stage(const Tensor& x, const GestFormerModel& model, std::size_t stage);
// Posterior over n classes; InputError if the feature shape does not match
// the config.
Tensor model_forward(const Tensor& features, const GestFormerModel& model);

// Binary checkpoint: magic "MWPT", version, config, then every learnable
// tensor as (name, extents, row-major doubles), little-endian throughout.
// Round-trips are bitwise exact.
void save_checkpoint(const std::string& path, const GestFormerModel& model);
GestFormerModel load_checkpoint(const std::string& path);

} // namespace gestformer
