#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gestformer/config.hpp"
#include "gestformer/cost.hpp"
#include "gestformer/data_io.hpp"
#include "gestformer/fusion.hpp"
#include "gestformer/gradcheck.hpp"
#include "gestformer/model.hpp"
#include "gestformer/trainer.hpp"

namespace fs = std::filesystem;
using namespace gestformer;

namespace {

// Shared flags every subcommand carries.
struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::int64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    std::string out_dir;

    void attach(CLI::App* sub, bool out_required) {
        sub->add_option("--config", config_path, "key=value configuration file");
        sub->add_option("--set", overrides, "config override key=value (repeatable)")
            ->take_all();
        seed_opt = sub->add_option("--seed", seed, "random seed (overrides config key seed)");
        auto* out = sub->add_option("--out", out_dir, "output directory");
        if (out_required) out->required();
    }

    Config assemble() const {
        Config cfg;
        if (!config_path.empty()) cfg = Config::from_file(config_path);
        for (const auto& kv : overrides) cfg.apply_override(kv);
        if (seed_opt && *seed_opt) cfg.set("seed", std::to_string(seed));
        return cfg;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw InputError("write failed: " + path.string());
}

void echo_config(const Config& cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "effective.config", cfg.echo());
}

ModelConfig model_config_from(const Config& cfg) {
    ModelConfig m;
    m.m = cfg.get_i64("m", m.m);
    m.d_in = cfg.get_i64("d_in", m.d_in);
    m.k = cfg.get_i64("k", m.k);
    m.stages = cfg.get_i64("stages", m.stages);
    m.n = cfg.get_i64("n", m.n);
    m.r = cfg.get_i64("r", m.r);
    m.msp = cfg.get_bool("msp", m.msp);
    m.wcp = cfg.get_bool("wcp", m.wcp);
    m.gdfn = cfg.get_bool("gdfn", m.gdfn);
    m.embedding = cfg.get_bool("embedding", m.embedding);
    m.validate();
    return m;
}

const std::vector<std::string> kModelKeys = {"m",   "d_in", "k",    "stages",   "n",
                                             "r",   "msp",  "wcp",  "gdfn",     "embedding"};

std::vector<std::string> with_model_keys(std::vector<std::string> extra) {
    extra.insert(extra.end(), kModelKeys.begin(), kModelKeys.end());
    return extra;
}

std::string pick_modality(const Manifest& manifest, const Config& cfg) {
    const std::string requested = cfg.get_str("modality", "");
    if (!requested.empty()) return requested;
    const auto mods = manifest.modalities();
    if (mods.size() == 1) return mods.front();
    std::string list;
    for (const auto& m : mods) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("manifest has " + std::to_string(mods.size()) +
                      " modalities (" + list + "); set modality=<name>");
}

Manifest filtered(const Manifest& manifest, const std::string& modality,
                  const std::string& which) {
    Manifest f = manifest.filter_modality(modality);
    if (f.entries.empty()) {
        throw InputError(which + " manifest has no entries for modality \"" + modality + "\"");
    }
    return f;
}

int argmax(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t j = 1; j < v.size(); ++j) {
        if (v[j] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
    }
    return best;
}

std::string format_acc(double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", a);
    return buf;
}

// --- commands ---------------------------------------------------------------

int cmd_gen_data(Config cfg, const std::string& out_dir) {
    cfg.require_known({"classes", "frames", "dim", "modalities", "sigma", "samples",
                       "train_samples", "test_samples", "seed"});
    SyntheticSpec spec;
    spec.classes = cfg.get_i64("classes", spec.classes);
    spec.m = cfg.get_i64("frames", spec.m);
    spec.d_in = cfg.get_i64("dim", spec.d_in);
    spec.modalities = cfg.get_i64("modalities", spec.modalities);
    spec.sigma = cfg.get_f64("sigma", spec.sigma);
    spec.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 0));
    if (cfg.has("train_samples") || cfg.has("test_samples")) {
        spec.train_samples = cfg.get_i64("train_samples", spec.train_samples);
        spec.test_samples = cfg.get_i64("test_samples", spec.test_samples);
    } else {
        const std::int64_t total = cfg.get_i64("samples", 360);
        spec.test_samples = total / 5; // 80/20 split
        spec.train_samples = total - spec.test_samples;
    }
    cfg.set("train_samples", std::to_string(spec.train_samples));
    cfg.set("test_samples", std::to_string(spec.test_samples));
    echo_config(cfg, out_dir);
    gen_synthetic(spec, out_dir);
    std::cout << "wrote " << spec.train_samples << " train / " << spec.test_samples
              << " test samples x " << spec.modalities << " modalities to " << out_dir << "\n";
    return 0;
}

int cmd_train(Config cfg, const std::string& out_dir) {
    cfg.require_known(with_model_keys({"seed", "epochs", "batch", "lr", "lr_decay",
                                       "train_manifest", "test_manifest", "modality"}));
    const std::string train_path = cfg.get_str("train_manifest", "");
    const std::string test_path = cfg.get_str("test_manifest", "");
    if (train_path.empty()) throw ConfigError("train: config key train_manifest is required");
    if (test_path.empty()) throw ConfigError("train: config key test_manifest is required");

    const ModelConfig mcfg = model_config_from(cfg);
    TrainOptions opt;
    opt.epochs = cfg.get_i64("epochs", opt.epochs);
    opt.batch = cfg.get_i64("batch", opt.batch);
    opt.lr = cfg.get_f64("lr", opt.lr);
    opt.lr_decay = cfg.get_bool("lr_decay", opt.lr_decay);
    opt.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 0));

    const Manifest train_mf = load_manifest(train_path);
    const Manifest test_mf = load_manifest(test_path);
    const std::string modality = pick_modality(train_mf, cfg);
    cfg.set("modality", modality);
    echo_config(cfg, out_dir);

    const LoadedSet train_set = load_set(filtered(train_mf, modality, "train"), mcfg);
    const LoadedSet test_set = load_set(filtered(test_mf, modality, "test"), mcfg);

    std::ofstream metrics(fs::path(out_dir) / "metrics.txt", std::ios::app);
    if (!metrics) throw InputError("cannot open metrics log in " + out_dir);

    TrainResult result = train_model(mcfg, opt, train_set, test_set, &metrics);
    for (const auto& s : result.history) std::cout << format_epoch_line(s) << "\n";

    const std::string ckpt = (fs::path(out_dir) / "checkpoint.mwpt").string();
    save_checkpoint(ckpt, result.model);
    const double final_test =
        result.history.empty() ? evaluate(result.model, test_set).accuracy
                               : result.history.back().test_acc;
    std::cout << "modality " << modality << ": final test accuracy "
              << format_acc(final_test) << ", checkpoint " << ckpt << "\n";
    return 0;
}

int cmd_eval(Config cfg, const std::string& out_dir) {
    cfg.require_known({"seed", "checkpoint", "manifest", "modality"});
    const std::string ckpt_path = cfg.get_str("checkpoint", "");
    const std::string mf_path = cfg.get_str("manifest", "");
    if (ckpt_path.empty()) throw ConfigError("eval: config key checkpoint is required");
    if (mf_path.empty()) throw ConfigError("eval: config key manifest is required");

    const GestFormerModel model = load_checkpoint(ckpt_path);
    const Manifest mf = load_manifest(mf_path);
    const std::string modality = pick_modality(mf, cfg);
    cfg.set("modality", modality);
    echo_config(cfg, out_dir);

    const LoadedSet set = load_set(filtered(mf, modality, "eval"), model.config);
    const EvalResult res = evaluate(model, set);

    std::string report = "accuracy = " + format_acc(res.accuracy) + "\n";
    for (std::size_t i = 0; i < res.confusion.size(); ++i) {
        report += "confusion " + std::to_string(i) + " =";
        for (const std::int64_t c : res.confusion[i]) report += " " + std::to_string(c);
        report += "\n";
    }
    write_text(fs::path(out_dir) / "eval.txt", report);
    save_posteriors((fs::path(out_dir) / ("posteriors_" + modality + ".txt")).string(),
                    modality, res.posteriors);
    std::cout << "modality " << modality << ": accuracy " << format_acc(res.accuracy) << " on "
              << set.size() << " samples\n";
    return 0;
}

int cmd_fuse(Config cfg, const std::string& out_dir, const std::vector<std::string>& files) {
    cfg.require_known({"seed"});
    echo_config(cfg, out_dir);

    std::vector<PosteriorFile> pfs;
    for (const auto& f : files) pfs.push_back(load_posteriors(f));
    const PosteriorFile& ref = pfs.front();
    const std::size_t count = ref.records.size();
    if (count == 0) throw InputError("fuse: " + files[0] + " has no samples");

    std::vector<std::map<std::string, std::size_t>> index(pfs.size());
    for (std::size_t p = 1; p < pfs.size(); ++p) {
        if (pfs[p].records.size() != count) {
            throw InputError("fuse: " + files[p] + " has " +
                             std::to_string(pfs[p].records.size()) + " samples, " + files[0] +
                             " has " + std::to_string(count));
        }
        for (std::size_t i = 0; i < pfs[p].records.size(); ++i) {
            index[p][pfs[p].records[i].id] = i;
        }
    }

    std::vector<std::int64_t> correct(pfs.size(), 0);
    std::int64_t fused_correct = 0;
    std::string lines;
    for (std::size_t i = 0; i < count; ++i) {
        const PosteriorRecord& r0 = ref.records[i];
        std::vector<ModalityPosterior> mods;
        for (std::size_t p = 0; p < pfs.size(); ++p) {
            const PosteriorRecord* r = &r0;
            if (p > 0) {
                const auto it = index[p].find(r0.id);
                if (it == index[p].end()) {
                    throw InputError("fuse: sample id \"" + r0.id + "\" from " + files[0] +
                                     " is missing in " + files[p]);
                }
                r = &pfs[p].records[it->second];
            }
            if (r->label != r0.label) {
                throw InputError("fuse: sample id \"" + r0.id + "\" has label " +
                                 std::to_string(r0.label) + " in " + files[0] + " but " +
                                 std::to_string(r->label) + " in " + files[p]);
            }
            if (argmax(r->probs) == r->label) ++correct[p];
            mods.push_back({pfs[p].modality,
                            Tensor(Shape{static_cast<std::int64_t>(r->probs.size())}, r->probs)});
        }
        const int fused = late_fuse(mods);
        if (fused == r0.label) ++fused_correct;
        lines += r0.id + "," + std::to_string(r0.label) + "," + std::to_string(fused) + "\n";
    }

    std::string report;
    for (std::size_t p = 0; p < pfs.size(); ++p) {
        const double acc = static_cast<double>(correct[p]) / static_cast<double>(count);
        report += "modality," + pfs[p].modality + "," + format_acc(acc) + "\n";
    }
    const double fused_acc = static_cast<double>(fused_correct) / static_cast<double>(count);
    report += "fused," + format_acc(fused_acc) + "\n";
    write_text(fs::path(out_dir) / "fusion.txt", report + lines);
    std::cout << report;
    return 0;
}

int cmd_gradcheck(Config cfg, const std::string& out_dir) {
    cfg.require_known({"seed"});
    const auto seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 0));
    if (!out_dir.empty()) echo_config(cfg, out_dir);

    const auto results = run_gradcheck_suite(seed);
    std::string report;
    for (const auto& r : results) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%-18s %.3e %s\n", r.name.c_str(), r.max_rel_err,
                      r.pass ? "PASS" : "FAIL");
        report += buf;
    }
    std::cout << report;
    if (!out_dir.empty()) write_text(fs::path(out_dir) / "gradcheck.txt", report);
    if (!all_pass(results)) {
        std::cerr << "gradient check failed\n";
        return 4;
    }
    return 0;
}

int cmd_bench(Config cfg, const std::string& out_dir) {
    cfg.require_known(with_model_keys({"seed"}));
    const ModelConfig mcfg = model_config_from(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 0));
    if (!out_dir.empty()) echo_config(cfg, out_dir);

    const GestFormerModel model = init_weights(mcfg, seed);
    std::string report = "[params]\n" + count_params(model).to_text();
    report += "[macs]\n" + count_macs(mcfg).to_text();
    std::cout << report;
    if (!out_dir.empty()) write_text(fs::path(out_dir) / "cost.txt", report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gesture sequence transformer toolkit"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, fuse_args, grad_args, bench_args;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic multimodal dataset");
    gen_args.attach(gen, true);
    std::int64_t g_classes = 0, g_frames = 0, g_dim = 0, g_modalities = 0, g_samples = 0;
    double g_sigma = 0.0;
    auto* o_classes = gen->add_option("--classes", g_classes, "number of gesture classes");
    auto* o_frames = gen->add_option("--frames", g_frames, "sequence length");
    auto* o_dim = gen->add_option("--dim", g_dim, "feature width");
    auto* o_modalities = gen->add_option("--modalities", g_modalities, "modality count");
    auto* o_sigma = gen->add_option("--sigma", g_sigma, "noise standard deviation");
    auto* o_samples = gen->add_option("--samples", g_samples, "total samples (80/20 split)");

    auto* train = app.add_subcommand("train", "train a model on a dataset manifest");
    train_args.attach(train, true);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    eval_args.attach(eval_cmd, true);

    auto* fuse = app.add_subcommand("fuse", "late-fuse per-modality posterior files");
    fuse_args.attach(fuse, true);
    std::vector<std::string> fuse_files;
    fuse->add_option("files", fuse_files, "posterior files, one per modality")
        ->required()
        ->expected(-1);

    auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    grad_args.attach(grad, false);

    auto* bench = app.add_subcommand("bench", "parameter and MAC accounting");
    bench_args.attach(bench, false);

    try {
        app.parse(argc, argv);

        if (*gen) {
            Config cfg = gen_args.assemble();
            if (*o_classes) cfg.set("classes", std::to_string(g_classes));
            if (*o_frames) cfg.set("frames", std::to_string(g_frames));
            if (*o_dim) cfg.set("dim", std::to_string(g_dim));
            if (*o_modalities) cfg.set("modalities", std::to_string(g_modalities));
            if (*o_sigma) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", g_sigma);
                cfg.set("sigma", buf);
            }
            if (*o_samples) cfg.set("samples", std::to_string(g_samples));
            return cmd_gen_data(std::move(cfg), gen_args.out_dir);
        }
        if (*train) return cmd_train(train_args.assemble(), train_args.out_dir);
        if (*eval_cmd) return cmd_eval(eval_args.assemble(), eval_args.out_dir);
        if (*fuse) return cmd_fuse(fuse_args.assemble(), fuse_args.out_dir, fuse_files);
        if (*grad) return cmd_gradcheck(grad_args.assemble(), grad_args.out_dir);
        if (*bench) return cmd_bench(bench_args.assemble(), bench_args.out_dir);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
