#include "gestformer/model.hpp"

#include <cmath>

#include "binio.hpp"

namespace gestformer {

void ModelConfig::validate() const {
    if (stages < 1) throw ConfigError("model: stages must be >= 1, got " + std::to_string(stages));
    if (m < 2) throw ConfigError("model: m must be >= 2, got " + std::to_string(m));
    if (k < 2) throw ConfigError("model: k must be >= 2, got " + std::to_string(k));
    if (n < 2) throw ConfigError("model: n must be >= 2, got " + std::to_string(n));
    if (d_in < 1) throw ConfigError("model: d_in must be >= 1, got " + std::to_string(d_in));
    if (r < 1) throw ConfigError("model: r must be >= 1, got " + std::to_string(r));
}

Tensor positional_encoding(std::int64_t m, std::int64_t k) {
    Tensor pe = Tensor::zeros(Shape{m, k});
    for (std::int64_t t = 0; t < m; ++t) {
        for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t i = j / 2;
            const double angle =
                static_cast<double>(t) /
                std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(k));
            pe.at(t, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

GestFormerModel zero_weights(const ModelConfig& cfg) {
    cfg.validate();
    GestFormerModel m;
    m.config = cfg;
    m.embed.proj_w = Tensor::zeros(Shape{cfg.d_in, cfg.k});
    m.embed.proj_b = Tensor::zeros(Shape{cfg.k});
    if (cfg.embedding) {
        m.embed.dconv = DepthwisePair{Tensor::zeros(Shape{1, 3, 3}), Tensor::zeros(Shape{1})};
    }
    m.pos = positional_encoding(cfg.m, cfg.k);
    m.stages.resize(static_cast<std::size_t>(cfg.stages));
    for (auto& st : m.stages) {
        st.norm1_scale = Tensor::zeros(Shape{cfg.k});
        st.norm1_shift = Tensor::zeros(Shape{cfg.k});
        if (cfg.wcp) st.wcp = WcpWeights::zeros();
        st.norm2_scale = Tensor::zeros(Shape{cfg.k});
        st.norm2_shift = Tensor::zeros(Shape{cfg.k});
        if (cfg.gdfn) {
            st.gdfn = GdfnWeights::zeros(cfg.k, cfg.r);
        } else {
            st.ffn = FfnWeights::zeros(cfg.k, cfg.r);
        }
    }
    m.cls_w = Tensor::zeros(Shape{cfg.k, cfg.n});
    m.cls_b = Tensor::zeros(Shape{cfg.n});
    return m;
}

namespace {

void fill_uniform(Tensor& t, std::int64_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

void fill_ones(Tensor& t) {
    for (double& v : t.data) v = 1.0;
}

} // namespace

GestFormerModel init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    GestFormerModel m = zero_weights(cfg);
    Rng rng(seed);
    fill_uniform(m.embed.proj_w, cfg.d_in, rng);
    if (m.embed.dconv) fill_uniform(m.embed.dconv->w, 9, rng);
    for (auto& st : m.stages) {
        fill_ones(st.norm1_scale);
        if (st.wcp) {
            for (auto& b : st.wcp->dc) {
                fill_uniform(b.dw, 9, rng);
                fill_uniform(b.pw, 1, rng);
            }
        }
        fill_ones(st.norm2_scale);
        if (st.gdfn) {
            fill_uniform(st.gdfn->p1_w, cfg.k, rng);
            fill_uniform(st.gdfn->d1_w, 9, rng);
            fill_uniform(st.gdfn->p2_w, cfg.k, rng);
            fill_uniform(st.gdfn->d2_w, 9, rng);
            fill_uniform(st.gdfn->p0_w, cfg.r * cfg.k, rng);
        }
        if (st.ffn) {
            fill_uniform(st.ffn->p1_w, cfg.k, rng);
            fill_uniform(st.ffn->p0_w, cfg.r * cfg.k, rng);
        }
    }
    fill_uniform(m.cls_w, cfg.k, rng);
    return m;
}

namespace {

template <typename Model, typename T>
void walk_params(Model& m, std::vector<std::pair<std::string, T*>>& out) {
    out.emplace_back("embed.proj.weight", &m.embed.proj_w);
    out.emplace_back("embed.proj.bias", &m.embed.proj_b);
    if (m.embed.dconv) {
        out.emplace_back("embed.dconv.weight", &m.embed.dconv->w);
        out.emplace_back("embed.dconv.bias", &m.embed.dconv->b);
    }
    for (std::size_t i = 0; i < m.stages.size(); ++i) {
        auto& st = m.stages[i];
        const std::string p = "stage" + std::to_string(i) + ".";
        out.emplace_back(p + "norm1.scale", &st.norm1_scale);
        out.emplace_back(p + "norm1.shift", &st.norm1_shift);
        if (st.wcp) {
            for (int b = 0; b < 4; ++b) {
                const std::string q = p + "wcp.dc" + std::to_string(b + 1) + ".";
                out.emplace_back(q + "dw.weight", &st.wcp->dc[static_cast<std::size_t>(b)].dw);
                out.emplace_back(q + "dw.bias", &st.wcp->dc[static_cast<std::size_t>(b)].dw_bias);
                out.emplace_back(q + "pw.weight", &st.wcp->dc[static_cast<std::size_t>(b)].pw);
                out.emplace_back(q + "pw.bias", &st.wcp->dc[static_cast<std::size_t>(b)].pw_bias);
            }
        }
        out.emplace_back(p + "norm2.scale", &st.norm2_scale);
        out.emplace_back(p + "norm2.shift", &st.norm2_shift);
        if (st.gdfn) {
            out.emplace_back(p + "gdfn.p1.weight", &st.gdfn->p1_w);
            out.emplace_back(p + "gdfn.p1.bias", &st.gdfn->p1_b);
            out.emplace_back(p + "gdfn.d1.weight", &st.gdfn->d1_w);
            out.emplace_back(p + "gdfn.d1.bias", &st.gdfn->d1_b);
            out.emplace_back(p + "gdfn.p2.weight", &st.gdfn->p2_w);
            out.emplace_back(p + "gdfn.p2.bias", &st.gdfn->p2_b);
            out.emplace_back(p + "gdfn.d2.weight", &st.gdfn->d2_w);
            out.emplace_back(p + "gdfn.d2.bias", &st.gdfn->d2_b);
            out.emplace_back(p + "gdfn.p0.weight", &st.gdfn->p0_w);
            out.emplace_back(p + "gdfn.p0.bias", &st.gdfn->p0_b);
        }
        if (st.ffn) {
            out.emplace_back(p + "ffn.p1.weight", &st.ffn->p1_w);
            out.emplace_back(p + "ffn.p1.bias", &st.ffn->p1_b);
            out.emplace_back(p + "ffn.p0.weight", &st.ffn->p0_w);
            out.emplace_back(p + "ffn.p0.bias", &st.ffn->p0_b);
        }
    }
    out.emplace_back("classifier.weight", &m.cls_w);
    out.emplace_back("classifier.bias", &m.cls_b);
}

} // namespace

std::vector<std::pair<std::string, Tensor*>> GestFormerModel::named_params() {
    std::vector<std::pair<std::string, Tensor*>> out;
    walk_params(*this, out);
    return out;
}

std::vector<std::pair<std::string, const Tensor*>> GestFormerModel::named_params() const {
    std::vector<std::pair<std::string, const Tensor*>> out;
    walk_params(*this, out);
    return out;
}

std::vector<Tensor*> GestFormerModel::params() {
    std::vector<Tensor*> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
}

void GestFormerModel::zero_grads() {
    for (Tensor* t : params()) t->zero_grad();
}

namespace ad {

StageVars bind(Tape& t, BlockWeights& st) {
    StageVars sv;
    sv.norm1_scale = t.leaf(st.norm1_scale);
    sv.norm1_shift = t.leaf(st.norm1_shift);
    if (st.wcp) sv.wcp = bind(t, *st.wcp);
    sv.norm2_scale = t.leaf(st.norm2_scale);
    sv.norm2_shift = t.leaf(st.norm2_shift);
    if (st.gdfn) sv.gdfn = bind(t, *st.gdfn);
    if (st.ffn) sv.ffn = bind(t, *st.ffn);
    return sv;
}

StageVars bind_const(Tape& t, const BlockWeights& st) {
    StageVars sv;
    sv.norm1_scale = t.constant(st.norm1_scale);
    sv.norm1_shift = t.constant(st.norm1_shift);
    if (st.wcp) sv.wcp = bind_const(t, *st.wcp);
    sv.norm2_scale = t.constant(st.norm2_scale);
    sv.norm2_shift = t.constant(st.norm2_shift);
    if (st.gdfn) sv.gdfn = bind_const(t, *st.gdfn);
    if (st.ffn) sv.ffn = bind_const(t, *st.ffn);
    return sv;
}

ModelVars bind(Tape& t, GestFormerModel& m) {
    ModelVars mv;
    mv.proj_w = t.leaf(m.embed.proj_w);
    mv.proj_b = t.leaf(m.embed.proj_b);
    if (m.embed.dconv) {
        mv.dconv_w = t.leaf(m.embed.dconv->w);
        mv.dconv_b = t.leaf(m.embed.dconv->b);
    }
    mv.pos = t.constant(m.pos);
    for (auto& st : m.stages) mv.stages.push_back(bind(t, st));
    mv.cls_w = t.leaf(m.cls_w);
    mv.cls_b = t.leaf(m.cls_b);
    return mv;
}

ModelVars bind_const(Tape& t, const GestFormerModel& m) {
    ModelVars mv;
    mv.proj_w = t.constant(m.embed.proj_w);
    mv.proj_b = t.constant(m.embed.proj_b);
    if (m.embed.dconv) {
        mv.dconv_w = t.constant(m.embed.dconv->w);
        mv.dconv_b = t.constant(m.embed.dconv->b);
    }
    mv.pos = t.constant(m.pos);
    for (const auto& st : m.stages) mv.stages.push_back(bind_const(t, st));
    mv.cls_w = t.constant(m.cls_w);
    mv.cls_b = t.constant(m.cls_b);
    return mv;
}

Var spatial_embed(Tape& t, Var f, const ModelVars& mv, const ModelConfig& cfg) {
    Var h = add_row_bias(t, matmul(t, f, mv.proj_w), mv.proj_b);
    if (mv.dconv_w) {
        Var plane = reshape(t, h, Shape{1, cfg.m, cfg.k});
        plane = add_channel_bias(t, depthwise_conv2d(t, plane, *mv.dconv_w), *mv.dconv_b);
        h = reshape(t, plane, Shape{cfg.m, cfg.k});
    }
    return h;
}

Var mwpt_stage(Tape& t, Var x, const StageVars& sv, const ModelConfig& cfg) {
    Var mixed = mwpa_forward(t, layer_norm(t, x, sv.norm1_scale, sv.norm1_shift),
                             sv.wcp ? &*sv.wcp : nullptr, cfg.mixer());
    Var y = add(t, x, mixed);
    Var q = layer_norm(t, y, sv.norm2_scale, sv.norm2_shift);
    Var ff = sv.gdfn ? gdfn_forward(t, q, *sv.gdfn) : ffn_forward(t, q, *sv.ffn);
    return add(t, y, ff);
}

Var model_logits(Tape& t, Var f, const ModelVars& mv, const ModelConfig& cfg) {
    Var h = spatial_embed(t, f, mv, cfg);
    h = add(t, h, mv.pos);
    for (const auto& sv : mv.stages) h = mwpt_stage(t, h, sv, cfg);
    Var pooled = reshape(t, mean_axis0(t, h), Shape{1, cfg.k});
    return add_row_bias(t, matmul(t, pooled, mv.cls_w), mv.cls_b);
}

} // namespace ad

Tensor spatial_embed(const Tensor& f, const GestFormerModel& model) {
    Tape t;
    ad::ModelVars mv = ad::bind_const(t, model);
    return t.value(ad::spatial_embed(t, t.constant(f), mv, model.config));
}

Tensor mwpt_stage(const Tensor& x, const GestFormerModel& model, std::size_t stage) {
    if (stage >= model.stages.size()) {
        throw ContractError("mwpt_stage: stage " + std::to_string(stage) + " out of range");
    }
    Tape t;
    ad::StageVars sv = ad::bind_const(t, model.stages[stage]);
    return t.value(ad::mwpt_stage(t, t.constant(x), sv, model.config));
}

Tensor model_forward(const Tensor& features, const GestFormerModel& model) {
    const ModelConfig& cfg = model.config;
    if (features.rank() != 2 || features.dim(0) != cfg.m || features.dim(1) != cfg.d_in) {
        throw InputError("model_forward: features " + features.shape.str() +
                         " do not match configured [" + std::to_string(cfg.m) + "x" +
                         std::to_string(cfg.d_in) + "]");
    }
    Tape t;
    ad::ModelVars mv = ad::bind_const(t, model);
    Var logits = ad::model_logits(t, t.constant(features), mv, cfg);
    return reshape(softmax(t.value(logits)), Shape{cfg.n});
}

// --- checkpoint -------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', 'W', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

} // namespace

void save_checkpoint(const std::string& path, const GestFormerModel& model) {
    binio::Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    const ModelConfig& c = model.config;
    w.i64(c.m);
    w.i64(c.d_in);
    w.i64(c.k);
    w.i64(c.stages);
    w.i64(c.n);
    w.i64(c.r);
    w.u8(c.msp ? 1 : 0);
    w.u8(c.wcp ? 1 : 0);
    w.u8(c.gdfn ? 1 : 0);
    w.u8(c.embedding ? 1 : 0);
    const auto params = model.named_params();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        w.str(name);
        w.u32(static_cast<std::uint32_t>(t->rank()));
        for (std::int64_t d : t->shape.dims) w.i64(d);
        for (double v : t->data) w.f64(v);
    }
    w.close();
}

GestFormerModel load_checkpoint(const std::string& path) {
    binio::Reader r(path);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) {
        throw FormatError(path + ": bad magic at byte 0, expected \"MWPT\"");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw FormatError(path + ": unsupported version " + std::to_string(version) +
                          " at byte 4, expected " + std::to_string(kVersion));
    }
    ModelConfig c;
    c.m = r.i64("config.m");
    c.d_in = r.i64("config.d_in");
    c.k = r.i64("config.k");
    c.stages = r.i64("config.stages");
    c.n = r.i64("config.n");
    c.r = r.i64("config.r");
    c.msp = r.u8("config.msp") != 0;
    c.wcp = r.u8("config.wcp") != 0;
    c.gdfn = r.u8("config.gdfn") != 0;
    c.embedding = r.u8("config.embedding") != 0;
    GestFormerModel model = zero_weights(c);
    auto params = model.named_params();
    const std::uint32_t count = r.u32("parameter count");
    if (count != params.size()) {
        throw FormatError(path + ": parameter count " + std::to_string(count) +
                          " does not match config-implied " + std::to_string(params.size()));
    }
    for (auto& [name, t] : params) {
        const std::string got = r.str("parameter name");
        if (got != name) {
            throw FormatError(path + ": parameter \"" + got + "\" where \"" + name +
                              "\" was expected (byte " + std::to_string(r.offset()) + ")");
        }
        const std::uint32_t rank = r.u32("rank");
        Shape s;
        for (std::uint32_t i = 0; i < rank; ++i) s.dims.push_back(r.i64("extent"));
        if (s != t->shape) {
            throw FormatError(path + ": parameter \"" + name + "\" has extents " + s.str() +
                              ", expected " + t->shape.str());
        }
        for (double& v : t->data) v = r.f64("tensor data");
    }
    r.expect_end();
    return model;
}

} // namespace gestformer
