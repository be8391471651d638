#include "gestformer/gradcheck.hpp"

#include <cmath>
#include <deque>
#include <memory>

#include "gestformer/blocks.hpp"
#include "gestformer/model.hpp"
#include "gestformer/rng.hpp"

namespace gestformer {

double gradcheck_max_rel_err(const GradCheckCase& c, double h) {
    for (Tensor* t : c.leaves) t->zero_grad();
    {
        Tape tape;
        Var loss = c.build(tape);
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (Tensor* t : c.leaves) {
        analytic.push_back(t->grad ? *t->grad : std::vector<double>(t->data.size(), 0.0));
    }

    double worst = 0.0;
    for (std::size_t li = 0; li < c.leaves.size(); ++li) {
        Tensor& t = *c.leaves[li];
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            const double saved = t.data[i];
            t.data[i] = saved + h;
            Tape tp;
            const double fp = tp.value(c.build(tp))[0];
            t.data[i] = saved - h;
            Tape tm;
            const double fm = tm.value(c.build(tm))[0];
            t.data[i] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double a = analytic[li][i];
            const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
            if (rel > worst) worst = rel;
        }
    }
    return worst;
}

namespace {

// Tensors owned by a case. A deque keeps element addresses stable across
// push_back, so leaf pointers taken early stay valid.
using Store = std::deque<Tensor>;

Tensor rnd(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(s));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Scalarizes a tensor output with fixed random weights so every output
// element influences the loss differently.
Var wsum(Tape& t, Var v, const Tensor& w) {
    return ad::sum_all(t, ad::mul(t, v, t.constant(w)));
}

// Probe weights for composite graphs are small. Below the 1e-8 floor the
// check is absolute, and one ulp of an O(1) loss over 2h is already ~1e-11,
// which would fail parameters whose true gradient is structurally zero
// (detail-band biases behind token-mean pooling). Shrinking the loss shrinks
// that rounding noise by the same factor.
constexpr double kProbeScale = 1e-5;

} // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<GradCheckCase> cases;

    // Unary/binary primitive: leaves in, weighted sum of the op output out.
    const auto op_case = [&](const std::string& name, std::vector<Shape> leaf_shapes,
                             Shape out_shape, auto apply) {
        auto st = std::make_shared<Store>();
        std::vector<Tensor*> leaves;
        for (auto& s : leaf_shapes) {
            st->push_back(rnd(s, rng));
            leaves.push_back(&st->back());
        }
        st->push_back(rnd(out_shape, rng));
        Tensor* w = &st->back();
        cases.push_back({name, leaves, [st, leaves, w, apply](Tape& t) {
                             std::vector<Var> vars;
                             for (Tensor* l : leaves) vars.push_back(t.leaf(*l));
                             return wsum(t, apply(t, vars), *w);
                         }});
    };

    op_case("matmul", {Shape{3, 4}, Shape{4, 5}}, Shape{3, 5},
            [](Tape& t, const std::vector<Var>& v) { return ad::matmul(t, v[0], v[1]); });
    op_case("add", {Shape{4, 5}, Shape{4, 5}}, Shape{4, 5},
            [](Tape& t, const std::vector<Var>& v) { return ad::add(t, v[0], v[1]); });
    op_case("mul", {Shape{4, 5}, Shape{4, 5}}, Shape{4, 5},
            [](Tape& t, const std::vector<Var>& v) { return ad::mul(t, v[0], v[1]); });
    op_case("scale", {Shape{4, 5}}, Shape{4, 5},
            [](Tape& t, const std::vector<Var>& v) { return ad::scale(t, v[0], 1.7); });
    op_case("add_row_bias", {Shape{4, 5}, Shape{5}}, Shape{4, 5},
            [](Tape& t, const std::vector<Var>& v) { return ad::add_row_bias(t, v[0], v[1]); });
    op_case("add_channel_bias", {Shape{2, 3, 4}, Shape{2}}, Shape{2, 3, 4},
            [](Tape& t, const std::vector<Var>& v) {
                return ad::add_channel_bias(t, v[0], v[1]);
            });
    op_case("gelu", {Shape{4, 5}}, Shape{4, 5},
            [](Tape& t, const std::vector<Var>& v) { return ad::gelu(t, v[0]); });
    op_case("layer_norm", {Shape{4, 6}, Shape{6}, Shape{6}}, Shape{4, 6},
            [](Tape& t, const std::vector<Var>& v) {
                return ad::layer_norm(t, v[0], v[1], v[2]);
            });
    op_case("softmax", {Shape{3, 5}}, Shape{3, 5},
            [](Tape& t, const std::vector<Var>& v) { return ad::softmax(t, v[0]); });
    op_case("avg_pool2d_k3", {Shape{1, 6, 7}}, Shape{1, 6, 7},
            [](Tape& t, const std::vector<Var>& v) { return ad::avg_pool2d(t, v[0], 3); });
    op_case("avg_pool2d_k5", {Shape{2, 7, 9}}, Shape{2, 7, 9},
            [](Tape& t, const std::vector<Var>& v) { return ad::avg_pool2d(t, v[0], 5); });
    op_case("depthwise_conv2d", {Shape{2, 5, 6}, Shape{2, 3, 3}}, Shape{2, 5, 6},
            [](Tape& t, const std::vector<Var>& v) {
                return ad::depthwise_conv2d(t, v[0], v[1]);
            });
    op_case("pointwise_conv2d", {Shape{3, 4, 5}, Shape{2, 3}}, Shape{2, 4, 5},
            [](Tape& t, const std::vector<Var>& v) {
                return ad::pointwise_conv2d(t, v[0], v[1]);
            });
    op_case("mean_axis0", {Shape{5, 4}}, Shape{4},
            [](Tape& t, const std::vector<Var>& v) { return ad::mean_axis0(t, v[0]); });
    op_case("reshape", {Shape{3, 4}}, Shape{2, 6},
            [](Tape& t, const std::vector<Var>& v) { return ad::reshape(t, v[0], Shape{2, 6}); });

    {
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{3, 4}, rng));
        Tensor* x = &st->back();
        cases.push_back(
            {"sum_all", {x}, [st, x](Tape& t) { return ad::sum_all(t, t.leaf(*x)); }});
    }

    const auto dwt_case = [&](const std::string& name, Shape in) {
        auto st = std::make_shared<Store>();
        st->push_back(rnd(in, rng));
        Tensor* x = &st->back();
        const std::int64_t bh = (in[1] + 1) / 2, bw = (in[2] + 1) / 2;
        std::vector<Tensor*> w;
        for (int i = 0; i < 4; ++i) {
            st->push_back(rnd(Shape{in[0], bh, bw}, rng));
            w.push_back(&st->back());
        }
        cases.push_back({name, {x}, [st, x, w](Tape& t) {
                             auto bands = ad::dwt2(t, t.leaf(*x));
                             Var acc = wsum(t, bands[0], *w[0]);
                             for (int i = 1; i < 4; ++i) {
                                 acc = ad::add(t, acc, wsum(t, bands[i], *w[i]));
                             }
                             return acc;
                         }});
    };
    dwt_case("dwt2_even", Shape{1, 6, 8});
    dwt_case("dwt2_odd", Shape{1, 5, 7});

    const auto idwt_case = [&](const std::string& name, std::int64_t oh, std::int64_t ow) {
        auto st = std::make_shared<Store>();
        const std::int64_t bh = (oh + 1) / 2, bw = (ow + 1) / 2;
        std::vector<Tensor*> bands;
        for (int i = 0; i < 4; ++i) {
            st->push_back(rnd(Shape{1, bh, bw}, rng));
            bands.push_back(&st->back());
        }
        st->push_back(rnd(Shape{1, oh, ow}, rng));
        Tensor* w = &st->back();
        cases.push_back({name, bands, [st, bands, w, oh, ow](Tape& t) {
                             return wsum(t,
                                         ad::idwt2(t, t.leaf(*bands[0]), t.leaf(*bands[1]),
                                                   t.leaf(*bands[2]), t.leaf(*bands[3]), oh, ow),
                                         *w);
                         }});
    };
    idwt_case("idwt2_even", 6, 8);
    idwt_case("idwt2_odd", 5, 7);

    {
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{4, 3}, rng, -2.0, 2.0));
        Tensor* logits = &st->back();
        const std::vector<int> labels{0, 2, 1, 0};
        cases.push_back({"cross_entropy", {logits}, [st, logits, labels](Tape& t) {
                             return ad::cross_entropy(t, t.leaf(*logits), labels);
                         }});
    }

    const auto rand_wcp = [&]() {
        WcpWeights w = WcpWeights::zeros();
        for (auto& b : w.dc) {
            b.dw = rnd(Shape{1, 3, 3}, rng);
            b.dw_bias = rnd(Shape{1}, rng);
            b.pw = rnd(Shape{1, 1}, rng);
            b.pw_bias = rnd(Shape{1}, rng);
        }
        return w;
    };
    const auto wcp_leaves = [](WcpWeights& w, std::vector<Tensor*>& out) {
        for (auto& b : w.dc) {
            out.push_back(&b.dw);
            out.push_back(&b.dw_bias);
            out.push_back(&b.pw);
            out.push_back(&b.pw_bias);
        }
    };

    const auto wcp_case = [&](const std::string& name, Shape in) {
        auto wts = std::make_shared<WcpWeights>(rand_wcp());
        auto st = std::make_shared<Store>();
        st->push_back(rnd(in, rng));
        Tensor* x = &st->back();
        st->push_back(rnd(in, rng, -kProbeScale, kProbeScale));
        Tensor* w = &st->back();
        std::vector<Tensor*> leaves{x};
        wcp_leaves(*wts, leaves);
        cases.push_back({name, leaves, [wts, st, x, w](Tape& t) {
                             return wsum(t, ad::wcp_forward(t, t.leaf(*x), bind(t, *wts)), *w);
                         }});
    };
    wcp_case("wcp", Shape{4, 8});
    wcp_case("wcp_odd", Shape{5, 7});

    {
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{4, 8}, rng));
        Tensor* x = &st->back();
        st->push_back(rnd(Shape{4, 8}, rng, -kProbeScale, kProbeScale));
        Tensor* w = &st->back();
        cases.push_back({"msp", {x}, [st, x, w](Tape& t) {
                             return wsum(t, ad::msp_forward(t, t.leaf(*x)), *w);
                         }});
    }

    {
        auto wts = std::make_shared<WcpWeights>(rand_wcp());
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{4, 8}, rng));
        Tensor* x = &st->back();
        st->push_back(rnd(Shape{4, 8}, rng, -kProbeScale, kProbeScale));
        Tensor* w = &st->back();
        std::vector<Tensor*> leaves{x};
        wcp_leaves(*wts, leaves);
        cases.push_back({"mwpa", leaves, [wts, st, x, w](Tape& t) {
                             WcpVars wv = bind(t, *wts);
                             return wsum(t, ad::mwpa_forward(t, t.leaf(*x), &wv, MixerToggles{}),
                                         *w);
                         }});
    }

    {
        auto wts = std::make_shared<GdfnWeights>(GdfnWeights::zeros(8, 2));
        std::vector<Tensor*> wt{&wts->p1_w, &wts->p1_b, &wts->d1_w, &wts->d1_b, &wts->p2_w,
                                &wts->p2_b, &wts->d2_w, &wts->d2_b, &wts->p0_w, &wts->p0_b};
        for (Tensor* p : wt) {
            for (double& v : p->data) v = rng.uniform(-0.7, 0.7);
        }
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{4, 8}, rng));
        Tensor* x = &st->back();
        st->push_back(rnd(Shape{4, 8}, rng, -kProbeScale, kProbeScale));
        Tensor* w = &st->back();
        std::vector<Tensor*> leaves{x};
        leaves.insert(leaves.end(), wt.begin(), wt.end());
        cases.push_back({"gdfn", leaves, [wts, st, x, w](Tape& t) {
                             return wsum(t, ad::gdfn_forward(t, t.leaf(*x), bind(t, *wts)), *w);
                         }});
    }

    {
        auto wts = std::make_shared<FfnWeights>(FfnWeights::zeros(8, 2));
        for (Tensor* p : {&wts->p1_w, &wts->p1_b, &wts->p0_w, &wts->p0_b}) {
            for (double& v : p->data) v = rng.uniform(-0.7, 0.7);
        }
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{4, 8}, rng));
        Tensor* x = &st->back();
        st->push_back(rnd(Shape{4, 8}, rng, -kProbeScale, kProbeScale));
        Tensor* w = &st->back();
        cases.push_back({"ffn",
                         {x, &wts->p1_w, &wts->p1_b, &wts->p0_w, &wts->p0_b},
                         [wts, st, x, w](Tape& t) {
                             return wsum(t, ad::ffn_forward(t, t.leaf(*x), bind(t, *wts)), *w);
                         }});
    }

    {
        ModelConfig cfg;
        cfg.m = 4;
        cfg.d_in = 6;
        cfg.k = 8;
        cfg.stages = 1;
        cfg.n = 3;
        auto model = std::make_shared<GestFormerModel>(init_weights(cfg, seed ^ 0x5eed));
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{4, 8}, rng));
        Tensor* x = &st->back();
        st->push_back(rnd(Shape{4, 8}, rng, -kProbeScale, kProbeScale));
        Tensor* w = &st->back();
        std::vector<Tensor*> leaves{x};
        for (auto& [name, p] : model->named_params()) {
            if (name.rfind("stage0.", 0) == 0) leaves.push_back(p);
        }
        cases.push_back({"mwpt_stage", leaves, [model, st, x, w](Tape& t) {
                             return wsum(t,
                                         ad::mwpt_stage(t, t.leaf(*x),
                                                        ad::bind(t, model->stages[0]),
                                                        model->config),
                                         *w);
                         }});
    }

    {
        ModelConfig cfg;
        cfg.m = 4;
        cfg.d_in = 6;
        cfg.k = 8;
        cfg.stages = 2;
        cfg.n = 3;
        auto model = std::make_shared<GestFormerModel>(init_weights(cfg, seed ^ 0xf00d));
        auto st = std::make_shared<Store>();
        st->push_back(rnd(Shape{4, 6}, rng));
        Tensor* x = &st->back();
        std::vector<Tensor*> leaves{x};
        for (Tensor* p : model->params()) leaves.push_back(p);
        cases.push_back({"model_toy", leaves, [model, st, x](Tape& t) {
                             ad::ModelVars mv = ad::bind(t, *model);
                             Var logits = ad::model_logits(t, t.leaf(*x), mv, model->config);
                             return ad::scale(t, ad::cross_entropy(t, logits, {1}), kProbeScale);
                         }});
    }

    std::vector<GradCheckResult> results;
    for (const auto& c : cases) {
        const double err = gradcheck_max_rel_err(c);
        results.push_back({c.name, err, err < kGradTol});
    }
    return results;
}

bool all_pass(const std::vector<GradCheckResult>& results) {
    for (const auto& r : results) {
        if (!r.pass) return false;
    }
    return true;
}

} // namespace gestformer
