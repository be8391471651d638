#include <cmath>

#include "doctest.h"
#include "gestformer/optim.hpp"
#include "helpers.hpp"

using namespace gestformer;

TEST_CASE("adam leaves parameters alone under zero gradients") {
    Tensor p(Shape{3}, {1.0, -2.0, 0.5});
    Tensor before = p;
    p.zero_grad();
    std::vector<Tensor*> params{&p};
    AdamState adam(params);
    adam.step(params);
    CHECK(p.data == before.data);
}

TEST_CASE("first adam step moves by -lr on a unit gradient") {
    Tensor p(Shape{1}, {0.0});
    p.ensure_grad();
    (*p.grad)[0] = 1.0;
    std::vector<Tensor*> params{&p};
    AdamState adam(params);
    adam.step(params);
    // Bias correction cancels at t=1, so the update is -lr/(1+eps-ish).
    CHECK(std::abs(p[0] - (-1e-4)) < 1e-6);
    CHECK(adam.step_count() == 1);
}

TEST_CASE("adam matches a hand-rolled two-step trace") {
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Tensor p(Shape{2}, {0.3, -0.7});
    std::vector<Tensor*> params{&p};
    AdamConfig cfg;
    cfg.lr = lr;
    AdamState adam(params, cfg);

    double ref[2] = {0.3, -0.7};
    double m[2] = {0, 0}, v[2] = {0, 0};
    const double g1[2] = {0.5, -1.25};
    const double g2[2] = {-1.5, 2.0};

    p.ensure_grad();
    for (int step = 1; step <= 2; ++step) {
        const double* g = step == 1 ? g1 : g2;
        p.zero_grad();
        (*p.grad)[0] = g[0];
        (*p.grad)[1] = g[1];
        adam.step(params);
        for (int i = 0; i < 2; ++i) {
            m[i] = b1 * m[i] + (1 - b1) * g[i];
            v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(b1, step));
            const double vh = v[i] / (1 - std::pow(b2, step));
            ref[i] -= lr * mh / (std::sqrt(vh) + eps);
            CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-15));
        }
    }
}

TEST_CASE("adam drives x^2 toward zero") {
    Tensor x(Shape{1}, {1.0});
    std::vector<Tensor*> params{&x};
    AdamConfig cfg;
    cfg.lr = 0.1;
    AdamState adam(params, cfg);
    x.ensure_grad();
    for (int i = 0; i < 100; ++i) {
        x.zero_grad();
        (*x.grad)[0] = 2.0 * x[0];
        adam.step(params);
    }
    CHECK(std::abs(x[0]) < 0.5);
}

TEST_CASE("adam rejects mismatched parameter lists") {
    Tensor a(Shape{2}, {0, 0});
    Tensor b(Shape{3}, {0, 0, 0});
    std::vector<Tensor*> init{&a};
    AdamState adam(init);
    std::vector<Tensor*> two{&a, &b};
    CHECK_THROWS_AS(adam.step(two), DimensionError);
    std::vector<Tensor*> wrong{&b};
    CHECK_THROWS_AS(adam.step(wrong), DimensionError);
}

TEST_CASE("step decay fires after epochs 50 and 75") {
    CHECK(lr_decay_factor(1) == doctest::Approx(1.0));
    CHECK(lr_decay_factor(50) == doctest::Approx(1.0));
    CHECK(lr_decay_factor(51) == doctest::Approx(0.1));
    CHECK(lr_decay_factor(75) == doctest::Approx(0.1));
    CHECK(lr_decay_factor(76) == doctest::Approx(0.01));
    CHECK(lr_decay_factor(200) == doctest::Approx(0.01));
}
