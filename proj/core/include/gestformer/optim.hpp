#pragma once

#include <cstdint>
#include <vector>

#include "gestformer/tensor.hpp"

namespace gestformer {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moment arrays are laid
// out per parameter; the step counter is shared.
class AdamState {
public:
    AdamState(const std::vector<Tensor*>& params, AdamConfig cfg = {});

    // One update from the parameters' grad slots (missing slot = zero
    // gradient). lr_scale multiplies the configured rate, carrying the
    // step-decay schedule.
    void step(const std::vector<Tensor*>& params, double lr_scale = 1.0);

    std::int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t t_ = 0;
};

// Step decay: x0.1 after epoch 50 and again after epoch 75 (1-indexed).
double lr_decay_factor(std::int64_t epoch);

} // namespace gestformer
