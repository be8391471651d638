#include "gestformer/cost.hpp"

namespace gestformer {

std::string CostReport::to_text() const {
    std::string out;
    for (const auto& [key, value] : lines) {
        out += key + " = " + std::to_string(value) + "\n";
    }
    out += "total = " + std::to_string(total) + "\n";
    return out;
}

CostReport count_params(const GestFormerModel& model) {
    CostReport rep;
    for (const auto& [name, t] : model.named_params()) {
        const std::size_t dot = name.rfind('.');
        const std::string layer = name.substr(0, dot);
        if (!rep.lines.empty() && rep.lines.back().first == layer) {
            rep.lines.back().second += t->numel();
            rep.total += t->numel();
        } else {
            rep.add(layer, t->numel());
        }
    }
    return rep;
}

CostReport count_macs(const ModelConfig& cfg) {
    cfg.validate();
    CostReport rep;
    const std::int64_t m = cfg.m, k = cfg.k, rk = cfg.r * cfg.k;
    rep.add("embed.proj", m * k * cfg.d_in);
    if (cfg.embedding) rep.add("embed.dconv", m * k * 9);
    // Subband extents after analysis (odd extents pad up by one).
    const std::int64_t hh = (m + 1) / 2;
    const std::int64_t hw = (k + 1) / 2;
    for (std::int64_t i = 0; i < cfg.stages; ++i) {
        const std::string p = "stage" + std::to_string(i) + ".";
        if (cfg.wcp) {
            for (int b = 1; b <= 4; ++b) {
                rep.add(p + "wcp.dc" + std::to_string(b) + ".dw", hh * hw * 9);
                rep.add(p + "wcp.dc" + std::to_string(b) + ".pw", hh * hw * 1);
            }
        }
        if (cfg.gdfn) {
            rep.add(p + "gdfn.p1", m * rk * k);
            rep.add(p + "gdfn.d1", m * rk * 9);
            rep.add(p + "gdfn.p2", m * rk * k);
            rep.add(p + "gdfn.d2", m * rk * 9);
            rep.add(p + "gdfn.p0", m * k * rk);
        } else {
            rep.add(p + "ffn.p1", m * rk * k);
            rep.add(p + "ffn.p0", m * k * rk);
        }
    }
    rep.add("classifier", cfg.n * k);
    return rep;
}

} // namespace gestformer
