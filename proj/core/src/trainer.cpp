#include "gestformer/trainer.hpp"

#include <cmath>
#include <cstdio>

#include "gestformer/autodiff.hpp"
#include "gestformer/optim.hpp"
#include "gestformer/rng.hpp"

namespace gestformer {

LoadedSet load_set(const Manifest& manifest, const ModelConfig& cfg) {
    LoadedSet set;
    for (const auto& e : manifest.entries) {
        FeatureSequenceFile f = load_feature_file(e.path);
        if (f.features.dim(0) != cfg.m || f.features.dim(1) != cfg.d_in) {
            throw ConfigError("dataset: " + e.path + " has features " + f.features.shape.str() +
                              ", model expects [" + std::to_string(cfg.m) + "x" +
                              std::to_string(cfg.d_in) + "]");
        }
        if (e.label < 0 || e.label >= cfg.n) {
            throw InputError("dataset: " + e.path + " has label " + std::to_string(e.label) +
                             ", expected [0, " + std::to_string(cfg.n) + ")");
        }
        set.features.push_back(std::move(f.features));
        set.labels.push_back(e.label);
        set.ids.push_back(sample_id_of(e.path));
    }
    return set;
}

namespace {

int argmax_row(const Tensor& t) {
    int best = 0;
    for (std::int64_t j = 1; j < t.numel(); ++j) {
        if (t[j] > t[best]) best = static_cast<int>(j);
    }
    return best;
}

[[noreturn]] void report_divergence(GestFormerModel& model, std::int64_t epoch) {
    for (const auto& [name, t] : model.named_params()) {
        if (!t->all_finite()) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                               ": parameter \"" + name + "\" is non-finite");
        }
    }
    throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                       ": loss is non-finite");
}

} // namespace

EvalResult evaluate(const GestFormerModel& model, const LoadedSet& set) {
    const std::int64_t n = model.config.n;
    EvalResult res;
    res.confusion.assign(static_cast<std::size_t>(n),
                         std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const Tensor post = model_forward(set.features[i], model);
        const int pred = argmax_row(post);
        const int label = set.labels[i];
        res.confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(pred)]++;
        if (pred == label) ++correct;
        res.posteriors.push_back({set.ids[i], label, post.data});
    }
    res.accuracy = set.size() == 0 ? 0.0
                                   : static_cast<double>(correct) /
                                         static_cast<double>(set.size());
    return res;
}

std::string format_epoch_line(const EpochStats& s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%lld,%.12g,%.6f,%.6f", static_cast<long long>(s.epoch),
                  s.loss, s.train_acc, s.test_acc);
    return buf;
}

TrainResult train_model(const ModelConfig& mcfg, const TrainOptions& opt,
                        const LoadedSet& train_set, const LoadedSet& test_set,
                        std::ostream* metrics) {
    mcfg.validate();
    if (opt.batch < 1) throw ConfigError("train: batch must be >= 1");
    if (opt.epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (train_set.size() == 0) throw InputError("train: empty training set");

    TrainResult out{init_weights(mcfg, opt.seed), {}};
    GestFormerModel& model = out.model;
    std::vector<Tensor*> params = model.params();
    AdamState adam(params, AdamConfig{opt.lr, 0.9, 0.999, 1e-8});
    Rng shuffle_rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::int64_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::int64_t correct = 0;
        const double lr_scale = opt.lr_decay ? lr_decay_factor(epoch) : 1.0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(opt.batch)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(opt.batch));
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            model.zero_grads();
            for (std::size_t bi = start; bi < end; ++bi) {
                const std::size_t i = order[bi];
                Tape t;
                ad::ModelVars mv = ad::bind(t, model);
                Var logits = ad::model_logits(t, t.constant(train_set.features[i]), mv, mcfg);
                Var ce = ad::cross_entropy(t, logits, {train_set.labels[i]});
                const double ce_val = t.value(ce)[0];
                if (!std::isfinite(ce_val)) report_divergence(model, epoch);
                loss_sum += ce_val;
                if (argmax_row(t.value(logits)) == train_set.labels[i]) ++correct;
                t.backward(ad::scale(t, ce, inv_batch));
            }
            adam.step(params, lr_scale);
        }
        for (Tensor* p : params) {
            if (!p->all_finite()) report_divergence(model, epoch);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.loss = loss_sum / static_cast<double>(train_set.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
        stats.test_acc = evaluate(model, test_set).accuracy;
        out.history.push_back(stats);
        if (metrics) *metrics << format_epoch_line(stats) << "\n" << std::flush;
    }
    return out;
}

} // namespace gestformer
