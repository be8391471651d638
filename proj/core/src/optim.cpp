#include "gestformer/optim.hpp"

#include <cmath>

namespace gestformer {

AdamState::AdamState(const std::vector<Tensor*>& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
        m_.emplace_back(p->data.size(), 0.0);
        v_.emplace_back(p->data.size(), 0.0);
    }
}

void AdamState::step(const std::vector<Tensor*>& params, double lr_scale) {
    if (params.size() != m_.size()) {
        throw DimensionError("adam: parameter list size changed: " +
                             std::to_string(params.size()) + " vs " + std::to_string(m_.size()));
    }
    ++t_;
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const double lr = cfg_.lr * lr_scale;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        if (p.data.size() != m_[pi].size()) {
            throw DimensionError("adam: parameter " + std::to_string(pi) + " shape " +
                                 p.shape.str() + " does not match its moment arrays");
        }
        const std::vector<double>* g = p.grad ? &*p.grad : nullptr;
        double* mp = m_[pi].data();
        double* vp = v_[pi].data();
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            mp[i] = b1 * mp[i] + (1.0 - b1) * gi;
            vp[i] = b2 * vp[i] + (1.0 - b2) * gi * gi;
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            p.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

double lr_decay_factor(std::int64_t epoch) {
    double f = 1.0;
    if (epoch > 50) f *= 0.1;
    if (epoch > 75) f *= 0.1;
    return f;
}

} // namespace gestformer
