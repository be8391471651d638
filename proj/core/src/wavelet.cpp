#include "gestformer/wavelet.hpp"

#include <array>

namespace gestformer {

namespace {

// Sign pattern of the orthonormal Haar matrix over a 2x2 block, indexed
// [band][position] with positions a=(0,0), b=(0,1), c=(1,0), d=(1,1).
// The matrix is symmetric and involutive, so analysis and synthesis share it.
constexpr std::array<std::array<double, 4>, 4> kSigns = {{
    {+1.0, +1.0, +1.0, +1.0}, // LL
    {+1.0, -1.0, +1.0, -1.0}, // LH
    {+1.0, +1.0, -1.0, -1.0}, // HL
    {+1.0, -1.0, -1.0, +1.0}, // HH
}};

void check_band(int band) {
    if (band < 0 || band > 3) throw ContractError("wavelet band index out of range");
}

void check_plane(const Tensor& x, const char* op) {
    if (x.rank() != 3) {
        throw DimensionError(std::string(op) + ": expected [C x H x W], got " + x.shape.str());
    }
}

// Reads x with the last row/column replicated when (y, xx) lies on the pad.
inline double padded_at(const double* plane, std::int64_t h, std::int64_t w, std::int64_t y,
                        std::int64_t xx) {
    if (y >= h) y = h - 1;
    if (xx >= w) xx = w - 1;
    return plane[y * w + xx];
}

} // namespace

const Tensor& SubbandSet::band(int i) const {
    check_band(i);
    switch (i) {
        case 0: return ll;
        case 1: return lh;
        case 2: return hl;
        default: return hh;
    }
}

Tensor& SubbandSet::band(int i) {
    check_band(i);
    switch (i) {
        case 0: return ll;
        case 1: return lh;
        case 2: return hl;
        default: return hh;
    }
}

Tensor dwt2_band(const Tensor& x, int band) {
    check_plane(x, "dwt2");
    check_band(band);
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::int64_t h2 = (h + 1) / 2, w2 = (w + 1) / 2;
    const auto& s = kSigns[static_cast<std::size_t>(band)];
    Tensor out = Tensor::zeros({c, h2, w2});
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const double* xp = x.data.data() + ch * h * w;
        double* op = out.data.data() + ch * h2 * w2;
        for (std::int64_t y = 0; y < h2; ++y) {
            for (std::int64_t xx = 0; xx < w2; ++xx) {
                const double a = padded_at(xp, h, w, 2 * y, 2 * xx);
                const double b = padded_at(xp, h, w, 2 * y, 2 * xx + 1);
                const double cc = padded_at(xp, h, w, 2 * y + 1, 2 * xx);
                const double d = padded_at(xp, h, w, 2 * y + 1, 2 * xx + 1);
                op[y * w2 + xx] = 0.5 * (s[0] * a + s[1] * b + s[2] * cc + s[3] * d);
            }
        }
    }
    return out;
}

SubbandSet dwt2(const Tensor& x) {
    check_plane(x, "dwt2");
    SubbandSet s;
    s.source_h = x.dim(1);
    s.source_w = x.dim(2);
    for (int b = 0; b < 4; ++b) s.band(b) = dwt2_band(x, b);
    return s;
}

Tensor idwt2_synth(const Tensor& ll, const Tensor& lh, const Tensor& hl, const Tensor& hh,
                   std::int64_t out_h, std::int64_t out_w) {
    check_plane(ll, "idwt2");
    const std::array<const Tensor*, 4> bands = {&ll, &lh, &hl, &hh};
    for (const Tensor* b : bands) {
        if (b->shape != ll.shape) {
            throw DimensionError("idwt2: subband shapes differ: " + ll.shape.str() + " vs " +
                                 b->shape.str());
        }
    }
    const std::int64_t c = ll.dim(0), h2 = ll.dim(1), w2 = ll.dim(2);
    if (out_h > 2 * h2 || out_w > 2 * w2 || out_h < 2 * h2 - 1 || out_w < 2 * w2 - 1) {
        throw DimensionError("idwt2: output extents " + Shape{c, out_h, out_w}.str() +
                             " inconsistent with subband shape " + ll.shape.str());
    }
    Tensor out = Tensor::zeros({c, out_h, out_w});
    for (std::int64_t ch = 0; ch < c; ++ch) {
        double* op = out.data.data() + ch * out_h * out_w;
        for (std::int64_t y = 0; y < h2; ++y) {
            for (std::int64_t xx = 0; xx < w2; ++xx) {
                double vals[4];
                for (int b = 0; b < 4; ++b) {
                    vals[b] = bands[static_cast<std::size_t>(b)]
                                  ->data[static_cast<std::size_t>((ch * h2 + y) * w2 + xx)];
                }
                for (int pos = 0; pos < 4; ++pos) {
                    const std::int64_t oy = 2 * y + pos / 2;
                    const std::int64_t ox = 2 * xx + pos % 2;
                    if (oy >= out_h || ox >= out_w) continue; // cropped pad cell
                    double acc = 0.0;
                    for (int b = 0; b < 4; ++b) {
                        acc += kSigns[static_cast<std::size_t>(b)][static_cast<std::size_t>(pos)] *
                               vals[b];
                    }
                    op[oy * out_w + ox] = 0.5 * acc;
                }
            }
        }
    }
    return out;
}

Tensor idwt2(const SubbandSet& s) {
    return idwt2_synth(s.ll, s.lh, s.hl, s.hh, s.source_h, s.source_w);
}

Tensor dwt2_band_adjoint(const Tensor& band_grad, int band, const Shape& input_shape) {
    check_plane(band_grad, "dwt2_band_adjoint");
    check_band(band);
    const std::int64_t c = input_shape[0], h = input_shape[1], w = input_shape[2];
    const std::int64_t h2 = band_grad.dim(1), w2 = band_grad.dim(2);
    const auto& s = kSigns[static_cast<std::size_t>(band)];
    Tensor out = Tensor::zeros(input_shape);
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const double* gp = band_grad.data.data() + ch * h2 * w2;
        double* op = out.data.data() + ch * h * w;
        for (std::int64_t y = 0; y < h2; ++y) {
            for (std::int64_t xx = 0; xx < w2; ++xx) {
                const double g = 0.5 * gp[y * w2 + xx];
                for (int pos = 0; pos < 4; ++pos) {
                    // Pad fold: contributions landing on a padded cell belong
                    // to the replicated source row/column.
                    std::int64_t sy = 2 * y + pos / 2;
                    std::int64_t sx = 2 * xx + pos % 2;
                    if (sy >= h) sy = h - 1;
                    if (sx >= w) sx = w - 1;
                    op[sy * w + sx] += s[static_cast<std::size_t>(pos)] * g;
                }
            }
        }
    }
    return out;
}

Tensor idwt2_synth_adjoint_band(const Tensor& out_grad, int band) {
    check_plane(out_grad, "idwt2_synth_adjoint_band");
    check_band(band);
    const std::int64_t c = out_grad.dim(0), h = out_grad.dim(1), w = out_grad.dim(2);
    const std::int64_t h2 = (h + 1) / 2, w2 = (w + 1) / 2;
    const auto& s = kSigns[static_cast<std::size_t>(band)];
    Tensor out = Tensor::zeros({c, h2, w2});
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const double* gp = out_grad.data.data() + ch * h * w;
        double* op = out.data.data() + ch * h2 * w2;
        for (std::int64_t y = 0; y < h2; ++y) {
            for (std::int64_t xx = 0; xx < w2; ++xx) {
                double acc = 0.0;
                for (int pos = 0; pos < 4; ++pos) {
                    const std::int64_t sy = 2 * y + pos / 2;
                    const std::int64_t sx = 2 * xx + pos % 2;
                    if (sy >= h || sx >= w) continue; // zero-embedded crop cell
                    acc += s[static_cast<std::size_t>(pos)] * gp[sy * w + sx];
                }
                op[y * w2 + xx] = 0.5 * acc;
            }
        }
    }
    return out;
}

} // namespace gestformer
