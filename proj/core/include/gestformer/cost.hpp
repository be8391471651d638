#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gestformer/model.hpp"

namespace gestformer {

// Flat ordered accounting table; rendered as one "key = value" line each
// plus a trailing total line.
struct CostReport {
    std::vector<std::pair<std::string, std::int64_t>> lines;
    std::int64_t total = 0;

    void add(const std::string& key, std::int64_t value) {
        lines.emplace_back(key, value);
        total += value;
    }

    std::string to_text() const;
};

// Learnable scalars per layer (weights and biases of a layer combined),
// keyed by the parameter-name prefix: "embed.proj", "stage0.gdfn.p1", ...
CostReport count_params(const GestFormerModel& model);

// Multiply-accumulates of one forward pass. Conventions: conv = output
// elements x kernel area x in-channels per group; matmul = M*N*K; pooling,
// normalization, GELU, softmax, wavelet transforms, and bias adds count 0.
CostReport count_macs(const ModelConfig& cfg);

} // namespace gestformer
