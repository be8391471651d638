#include <cmath>

#include "doctest.h"
#include "gestformer/autodiff.hpp"
#include "gestformer/gradcheck.hpp"
#include "helpers.hpp"

using namespace gestformer;

TEST_CASE("backward of sum is all ones") {
    Rng rng(301);
    Tensor x = oracle::rnd(Shape{3, 5}, rng);
    Tape t;
    t.backward(ad::sum_all(t, t.leaf(x)));
    REQUIRE(x.grad.has_value());
    for (double g : *x.grad) CHECK(g == 1.0);
}

TEST_CASE("backward of the elementwise square") {
    Tensor x(Shape{3}, {1, 2, 3});
    Tape t;
    Var v = t.leaf(x);
    t.backward(ad::sum_all(t, ad::mul(t, v, v)));
    REQUIRE(x.grad.has_value());
    CHECK((*x.grad)[0] == doctest::Approx(2.0));
    CHECK((*x.grad)[1] == doctest::Approx(4.0));
    CHECK((*x.grad)[2] == doctest::Approx(6.0));
}

TEST_CASE("backward rejects non-scalar losses") {
    Tensor x(Shape{2, 2}, {1, 2, 3, 4});
    Tape t;
    Var v = t.leaf(x);
    CHECK_THROWS_AS(t.backward(v), ContractError);
}

TEST_CASE("two backward sweeps accumulate exactly twice") {
    Rng rng(302);
    Tensor x = oracle::rnd(Shape{4, 4}, rng);
    Tensor w = oracle::rnd(Shape{4, 4}, rng);

    Tensor once = x;
    {
        Tape t;
        t.backward(ad::sum_all(t, ad::mul(t, ad::gelu(t, t.leaf(once)), t.constant(w))));
    }
    Tensor twice = x;
    {
        Tape t;
        Var loss = ad::sum_all(t, ad::mul(t, ad::gelu(t, t.leaf(twice)), t.constant(w)));
        t.backward(loss);
        t.backward(loss);
    }
    REQUIRE(once.grad.has_value());
    REQUIRE(twice.grad.has_value());
    for (std::size_t i = 0; i < once.grad->size(); ++i) {
        CHECK((*twice.grad)[i] == doctest::Approx(2.0 * (*once.grad)[i]).epsilon(1e-15));
    }
}

TEST_CASE("cross_entropy fixed values") {
    Tensor uniform(Shape{1, 2}, {0, 0});
    CHECK(cross_entropy_value(uniform, {0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Tensor extreme(Shape{1, 2}, {1000, 0});
    const double loss = cross_entropy_value(extreme, {0});
    CHECK(std::isfinite(loss));
    CHECK(loss >= 0.0);
    CHECK(loss < 1e-10);
}

TEST_CASE("cross_entropy matches a long-double reference") {
    Rng rng(303);
    for (int trial = 0; trial < 50; ++trial) {
        const std::int64_t B = 1 + static_cast<std::int64_t>(rng.below(5));
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.below(8));
        Tensor logits = oracle::rnd(Shape{B, n}, rng, -5.0, 5.0);
        std::vector<int> labels;
        for (std::int64_t i = 0; i < B; ++i) {
            labels.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(n))));
        }
        long double acc = 0.0L;
        for (std::int64_t i = 0; i < B; ++i) {
            long double mx = logits.at(i, 0);
            for (std::int64_t j = 1; j < n; ++j) {
                mx = std::max<long double>(mx, logits.at(i, j));
            }
            long double z = 0.0L;
            for (std::int64_t j = 0; j < n; ++j) z += std::exp(logits.at(i, j) - mx);
            acc += std::log(z) + mx - logits.at(i, labels[static_cast<std::size_t>(i)]);
        }
        const double want = static_cast<double>(acc / B);
        CHECK(cross_entropy_value(logits, labels) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("cross_entropy rejects out-of-range labels") {
    Tensor logits = Tensor::zeros(Shape{2, 3});
    CHECK_THROWS_AS(cross_entropy_value(logits, {0, 3}), InputError);
    CHECK_THROWS_AS(cross_entropy_value(logits, {-1, 0}), InputError);
    Tape t;
    CHECK_THROWS_AS(ad::cross_entropy(t, t.constant(logits), {0, 5}), InputError);
}

TEST_CASE("finite-difference check on a 4x4 input") {
    Rng rng(304);
    Tensor x = oracle::rnd(Shape{4, 4}, rng);
    Tensor sc = oracle::rnd(Shape{4}, rng, 0.5, 1.5);
    Tensor sh = oracle::rnd(Shape{4}, rng);
    Tensor w = oracle::rnd(Shape{4, 4}, rng);
    GradCheckCase c{
        "layer_norm_4x4",
        {&x, &sc, &sh},
        [&](Tape& t) {
            Var ln = ad::layer_norm(t, t.leaf(x), t.leaf(sc), t.leaf(sh));
            return ad::sum_all(t, ad::mul(t, ln, t.constant(w)));
        },
    };
    CHECK(gradcheck_max_rel_err(c) < kGradTol);
}

TEST_CASE("the shared gradient suite passes") {
    auto results = run_gradcheck_suite(9001);
    CHECK(results.size() >= 25);
    for (const auto& r : results) {
        INFO(r.name, " max rel err ", r.max_rel_err);
        CHECK(r.pass);
    }
    CHECK(all_pass(results));
}
