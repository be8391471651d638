#pragma once

#include "gestformer/tensor.hpp"

namespace gestformer {

// Single-level orthonormal Haar analysis of a [C x H x W] map. Odd extents
// are padded by replicating the last row/column before analysis; the source
// extents are kept so the synthesis can crop back.
struct SubbandSet {
    Tensor ll, lh, hl, hh;
    std::int64_t source_h = 0;
    std::int64_t source_w = 0;

    const Tensor& band(int i) const;
    Tensor& band(int i);
};

// Per non-overlapping 2x2 block [[a,b],[c,d]]:
//   LL = (a+b+c+d)/2   LH = (a-b+c-d)/2
//   HL = (a+b-c-d)/2   HH = (a-b-c+d)/2
SubbandSet dwt2(const Tensor& x);

// Exact inverse of dwt2 including the crop of any recorded padding.
Tensor idwt2(const SubbandSet& s);

// --- single-band kernels (used by the autodiff layer) ----------------------

// Analysis restricted to one band; bands are LL=0, LH=1, HL=2, HH=3.
Tensor dwt2_band(const Tensor& x, int band);

// Adjoint of dwt2_band: maps a band-plane cotangent back to the input grid
// (synthesis of the single band followed by the pad fold).
Tensor dwt2_band_adjoint(const Tensor& band_grad, int band, const Shape& input_shape);

// Synthesis from four planes, cropped to [C x out_h x out_w].
Tensor idwt2_synth(const Tensor& ll, const Tensor& lh, const Tensor& hl, const Tensor& hh,
                   std::int64_t out_h, std::int64_t out_w);

// Adjoint of idwt2_synth restricted to one band: zero-embeds the output
// cotangent to the even grid and analyzes it.
Tensor idwt2_synth_adjoint_band(const Tensor& out_grad, int band);

} // namespace gestformer
