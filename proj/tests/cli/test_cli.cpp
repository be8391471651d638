#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gestformer/autodiff.hpp"
#include "gestformer/data_io.hpp"
#include "gestformer/fusion.hpp"
#include "gestformer/model.hpp"
#include "gestformer/trainer.hpp"

using namespace gestformer;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_root() {
    static const fs::path root = [] {
        fs::path p = fs::temp_directory_path() / "gf_cli_tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path scratch(const std::string& name) {
    fs::path p = scratch_root() / name;
    fs::create_directories(p);
    return p;
}

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') {
            q += "'\\''";
        } else {
            q += c;
        }
    }
    return q + "'";
}

RunResult run_cli(const std::vector<std::string>& args) {
    static int counter = 0;
    const fs::path out_file = scratch_root() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err_file = scratch_root() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = shell_quote(GESTFORMER_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " > " + shell_quote(out_file.string()) + " 2> " + shell_quote(err_file.string());
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

// Emits a small two-split dataset and returns its directory.
fs::path make_dataset(const std::string& name, int modalities, double sigma,
                      int train_n, int test_n, int seed) {
    const fs::path dir = scratch(name);
    RunResult r = run_cli({"gen-data", "--out", dir.string(),
                           "--set", "classes=3",
                           "--set", "frames=8",
                           "--set", "dim=4",
                           "--set", "modalities=" + std::to_string(modalities),
                           "--set", "sigma=" + std::to_string(sigma),
                           "--set", "train_samples=" + std::to_string(train_n),
                           "--set", "test_samples=" + std::to_string(test_n),
                           "--seed", std::to_string(seed)});
    REQUIRE(r.code == 0);
    return dir;
}

std::vector<std::string> model_overrides() {
    return {"--set", "m=8", "--set", "d_in=4", "--set", "k=8",
            "--set", "stages=1", "--set", "n=3"};
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    return fields;
}

} // namespace

TEST_CASE("gen-data writes a deterministic dataset tree") {
    const fs::path a = scratch("gen_a");
    const fs::path b = scratch("gen_b");
    const std::vector<std::string> common = {
        "--set", "classes=3", "--set", "frames=8",  "--set", "dim=4",
        "--set", "modalities=2", "--set", "sigma=0.2",
        "--set", "train_samples=6", "--set", "test_samples=3", "--seed", "9"};

    std::vector<std::string> args = {"gen-data", "--out", a.string()};
    args.insert(args.end(), common.begin(), common.end());
    RunResult ra = run_cli(args);
    CHECK(ra.code == 0);
    CHECK(ra.out.find("wrote 6 train / 3 test") != std::string::npos);

    args = {"gen-data", "--out", b.string()};
    args.insert(args.end(), common.begin(), common.end());
    REQUIRE(run_cli(args).code == 0);

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a)) {
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    CHECK(names.size() == 9 * 2 + 3);  // (6+3) samples x 2 modalities + 2 manifests + echo
    for (const auto& name : names) {
        CAPTURE(name);
        REQUIRE(fs::exists(b / name));
        CHECK(slurp(a / name) == slurp(b / name));
    }

    Manifest train = load_manifest((a / "train.manifest").string());
    CHECK(train.entries.size() == 12);
    CHECK(train.modalities() == std::vector<std::string>{"mod0", "mod1"});

    const std::string echo = slurp(a / "effective.config");
    CHECK(echo.find("classes=3") != std::string::npos);
    CHECK(echo.find("train_samples=6") != std::string::npos);
    CHECK(echo.find("seed=9") != std::string::npos);
}

TEST_CASE("gen-data splits a total sample count 80/20") {
    const fs::path dir = scratch("gen_split");
    RunResult r = run_cli({"gen-data", "--out", dir.string(), "--classes", "3", "--frames", "6",
                           "--dim", "2", "--samples", "20", "--sigma", "0.1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("wrote 16 train / 4 test") != std::string::npos);
    CHECK(load_manifest((dir / "train.manifest").string()).entries.size() == 16);
    CHECK(load_manifest((dir / "test.manifest").string()).entries.size() == 4);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli({"gen-data", "--set", "classes=3"}).code == 2);  // --out missing
    CHECK(run_cli({"train", "--set", "epochs=1"}).code == 2);
    CHECK(run_cli({"gen-data", "--out", scratch("gen_bad").string(), "--nope"}).code == 2);
    CHECK(run_cli({"no-such-command"}).code == 2);

    RunResult r = run_cli({"gen-data", "--out", scratch("gen_bad2").string(),
                           "--set", "clsses=3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("clsses") != std::string::npos);
}

TEST_CASE("train writes the checkpoint, metrics, and effective config") {
    const fs::path data = make_dataset("train_data", 1, 0.1, 12, 6, 3);
    const fs::path out = scratch("train_run");
    std::vector<std::string> args = {
        "train", "--out", out.string(),
        "--set", "train_manifest=" + (data / "train.manifest").string(),
        "--set", "test_manifest=" + (data / "test.manifest").string(),
        "--set", "epochs=2", "--set", "batch=4", "--set", "lr=0.001", "--seed", "5"};
    const auto mo = model_overrides();
    args.insert(args.end(), mo.begin(), mo.end());
    RunResult r = run_cli(args);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("modality mod0: final test accuracy") != std::string::npos);

    GestFormerModel model = load_checkpoint((out / "checkpoint.mwpt").string());
    CHECK(model.config.m == 8);
    CHECK(model.config.k == 8);
    CHECK(model.config.stages == 1);

    const auto lines = split_lines(slurp(out / "metrics.txt"));
    REQUIRE(lines.size() == 2);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto fields = split_csv(lines[i]);
        REQUIRE(fields.size() == 4);
        CHECK(fields[0] == std::to_string(i + 1));
        CHECK(std::stod(fields[1]) > 0.0);
        CHECK(std::stod(fields[2]) >= 0.0);
        CHECK(std::stod(fields[3]) <= 1.0);
    }

    const std::string echo = slurp(out / "effective.config");
    CHECK(echo.find("modality=mod0") != std::string::npos);
    CHECK(echo.find("epochs=2") != std::string::npos);
}

TEST_CASE("train with zero epochs checkpoints the seeded initialization") {
    const fs::path data = make_dataset("train_zero", 1, 0.1, 6, 3, 4);
    const fs::path out = scratch("train_zero_run");
    std::vector<std::string> args = {
        "train", "--out", out.string(),
        "--set", "train_manifest=" + (data / "train.manifest").string(),
        "--set", "test_manifest=" + (data / "test.manifest").string(),
        "--set", "epochs=0", "--seed", "21"};
    const auto mo = model_overrides();
    args.insert(args.end(), mo.begin(), mo.end());
    REQUIRE(run_cli(args).code == 0);

    GestFormerModel got = load_checkpoint((out / "checkpoint.mwpt").string());
    GestFormerModel want = init_weights(got.config, 21);
    auto pg = got.named_params();
    auto pw = want.named_params();
    REQUIRE(pg.size() == pw.size());
    for (std::size_t i = 0; i < pg.size(); ++i) {
        CHECK(pg[i].second->data == pw[i].second->data);
    }
    CHECK(slurp(out / "metrics.txt").empty());
}

TEST_CASE("the first training epoch improves on the untrained loss") {
    const fs::path data = make_dataset("train_desc", 1, 0.1, 12, 6, 8);
    const fs::path out = scratch("train_desc_run");
    std::vector<std::string> args = {
        "train", "--out", out.string(),
        "--set", "train_manifest=" + (data / "train.manifest").string(),
        "--set", "test_manifest=" + (data / "test.manifest").string(),
        "--set", "epochs=1", "--set", "batch=4", "--set", "lr=0.001", "--seed", "13"};
    const auto mo = model_overrides();
    args.insert(args.end(), mo.begin(), mo.end());
    REQUIRE(run_cli(args).code == 0);

    ModelConfig mcfg;
    mcfg.m = 8;
    mcfg.d_in = 4;
    mcfg.k = 8;
    mcfg.stages = 1;
    mcfg.n = 3;
    const GestFormerModel init = init_weights(mcfg, 13);
    const LoadedSet train = load_set(load_manifest((data / "train.manifest").string()), mcfg);
    double init_loss = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        Tape t;
        ad::ModelVars mv = ad::bind_const(t, init);
        Var logits = ad::model_logits(t, t.constant(train.features[i]), mv, mcfg);
        init_loss += cross_entropy_value(t.value(logits), {train.labels[i]});
    }
    init_loss /= static_cast<double>(train.size());

    const auto lines = split_lines(slurp(out / "metrics.txt"));
    REQUIRE(lines.size() == 1);
    const double epoch1_loss = std::stod(split_csv(lines[0])[1]);
    CHECK(epoch1_loss < init_loss);
}

TEST_CASE("training runs are bitwise reproducible") {
    const fs::path data = make_dataset("train_repro", 1, 0.1, 8, 4, 6);
    const auto train_into = [&](const fs::path& out) {
        std::vector<std::string> args = {
            "train", "--out", out.string(),
            "--set", "train_manifest=" + (data / "train.manifest").string(),
            "--set", "test_manifest=" + (data / "test.manifest").string(),
            "--set", "epochs=2", "--set", "batch=3", "--set", "lr=0.0005", "--seed", "42"};
        const auto mo = model_overrides();
        args.insert(args.end(), mo.begin(), mo.end());
        REQUIRE(run_cli(args).code == 0);
    };
    const fs::path r1 = scratch("train_repro_1");
    const fs::path r2 = scratch("train_repro_2");
    train_into(r1);
    train_into(r2);
    CHECK(slurp(r1 / "checkpoint.mwpt") == slurp(r2 / "checkpoint.mwpt"));
    CHECK(slurp(r1 / "metrics.txt") == slurp(r2 / "metrics.txt"));
    CHECK(slurp(r1 / "effective.config") == slurp(r2 / "effective.config"));

    // The echoed config alone reproduces the run.
    const fs::path r3 = scratch("train_repro_3");
    REQUIRE(run_cli({"train", "--config", (r1 / "effective.config").string(),
                     "--out", r3.string()})
                .code == 0);
    CHECK(slurp(r1 / "checkpoint.mwpt") == slurp(r3 / "checkpoint.mwpt"));
    CHECK(slurp(r1 / "metrics.txt") == slurp(r3 / "metrics.txt"));
}

TEST_CASE("eval reports the trained accuracy and writes loadable posteriors") {
    const fs::path data = make_dataset("eval_data", 1, 0.1, 12, 6, 14);
    const fs::path trained = scratch("eval_train");
    std::vector<std::string> args = {
        "train", "--out", trained.string(),
        "--set", "train_manifest=" + (data / "train.manifest").string(),
        "--set", "test_manifest=" + (data / "test.manifest").string(),
        "--set", "epochs=2", "--set", "batch=4", "--set", "lr=0.001", "--seed", "15"};
    const auto mo = model_overrides();
    args.insert(args.end(), mo.begin(), mo.end());
    REQUIRE(run_cli(args).code == 0);

    const fs::path out = scratch("eval_run");
    RunResult r = run_cli({"eval", "--out", out.string(),
                           "--set", "checkpoint=" + (trained / "checkpoint.mwpt").string(),
                           "--set", "manifest=" + (data / "test.manifest").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("on 6 samples") != std::string::npos);

    const auto eval_lines = split_lines(slurp(out / "eval.txt"));
    REQUIRE(eval_lines.size() == 4);  // accuracy + 3 confusion rows
    CHECK(eval_lines[0].rfind("accuracy = ", 0) == 0);
    std::int64_t confusion_total = 0;
    for (int i = 1; i <= 3; ++i) {
        std::stringstream ss(eval_lines[static_cast<std::size_t>(i)]);
        std::string word;
        ss >> word;  // "confusion"
        int row = 0;
        ss >> row >> word;  // index then "="
        std::int64_t c = 0;
        while (ss >> c) confusion_total += c;
    }
    CHECK(confusion_total == 6);

    // The eval accuracy is the metrics file's final test accuracy.
    const auto metric_lines = split_lines(slurp(trained / "metrics.txt"));
    const std::string last_test_acc = split_csv(metric_lines.back())[3];
    CHECK(eval_lines[0] == "accuracy = " + last_test_acc);

    PosteriorFile pf = load_posteriors((out / "posteriors_mod0.txt").string());
    CHECK(pf.modality == "mod0");
    REQUIRE(pf.records.size() == 6);
    for (const auto& rec : pf.records) {
        CHECK(rec.label >= 0);
        CHECK(rec.label < 3);
        CHECK(rec.probs.size() == 3);
    }

    const fs::path out2 = scratch("eval_run_2");
    REQUIRE(run_cli({"eval", "--out", out2.string(),
                     "--set", "checkpoint=" + (trained / "checkpoint.mwpt").string(),
                     "--set", "manifest=" + (data / "test.manifest").string()})
                .code == 0);
    CHECK(slurp(out / "eval.txt") == slurp(out2 / "eval.txt"));
}

TEST_CASE("eval on a missing checkpoint exits with the I/O code") {
    const fs::path data = make_dataset("eval_missing", 1, 0.1, 3, 3, 2);
    RunResult r = run_cli({"eval", "--out", scratch("eval_missing_run").string(),
                           "--set", "checkpoint=/nonexistent/model.mwpt",
                           "--set", "manifest=" + (data / "test.manifest").string()});
    CHECK(r.code == 3);
}

TEST_CASE("fuse combines hand-written posterior files") {
    const fs::path dir = scratch("fuse_hand");
    const std::string a = (dir / "rgb.txt").string();
    const std::string b = (dir / "depth.txt").string();
    {
        std::ofstream out(a);
        out << "modality=rgb\n";
        out << "s0,0,0.6,0.2,0.2\n";
        out << "s1,1,0.5,0.3,0.2\n";
        out << "s2,2,0.1,0.2,0.7\n";
    }
    {
        std::ofstream out(b);
        out << "modality=depth\n";
        out << "s0,0,0.4,0.3,0.3\n";
        out << "s1,1,0.1,0.8,0.1\n";
        out << "s2,2,0.3,0.4,0.3\n";
    }
    const fs::path out_dir = scratch("fuse_hand_run");
    RunResult r = run_cli({"fuse", "--out", out_dir.string(), a, b});
    REQUIRE(r.code == 0);

    const auto lines = split_lines(slurp(out_dir / "fusion.txt"));
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "modality,rgb,0.666667");
    CHECK(lines[1] == "modality,depth,0.666667");
    CHECK(lines[2] == "fused,1.000000");
    CHECK(lines[3] == "s0,0,0");
    CHECK(lines[4] == "s1,1,1");
    CHECK(lines[5] == "s2,2,2");

    // Summed posteriors do not depend on the file order.
    const fs::path swapped = scratch("fuse_hand_swapped");
    REQUIRE(run_cli({"fuse", "--out", swapped.string(), b, a}).code == 0);
    const auto sl = split_lines(slurp(swapped / "fusion.txt"));
    CHECK(sl[2] == "fused,1.000000");

    // Fusing a file with itself reproduces its own accuracy.
    const fs::path self = scratch("fuse_hand_self");
    REQUIRE(run_cli({"fuse", "--out", self.string(), a, a}).code == 0);
    const auto selfl = split_lines(slurp(self / "fusion.txt"));
    CHECK(selfl[0] == "modality,rgb,0.666667");
    CHECK(selfl[2] == "fused,0.666667");
}

TEST_CASE("fuse rejects misaligned posterior files") {
    const fs::path dir = scratch("fuse_bad");
    const std::string a = (dir / "a.txt").string();
    {
        std::ofstream out(a);
        out << "modality=rgb\n";
        out << "s0,0,0.6,0.4\n";
        out << "s1,1,0.5,0.5\n";
    }

    const std::string shorter = (dir / "shorter.txt").string();
    {
        std::ofstream out(shorter);
        out << "modality=depth\ns0,0,0.5,0.5\n";
    }
    RunResult r = run_cli({"fuse", "--out", scratch("fuse_bad_r1").string(), a, shorter});
    CHECK(r.code == 3);
    CHECK(r.err.find("1 samples") != std::string::npos);

    const std::string renamed = (dir / "renamed.txt").string();
    {
        std::ofstream out(renamed);
        out << "modality=depth\ns0,0,0.5,0.5\nsX,1,0.5,0.5\n";
    }
    r = run_cli({"fuse", "--out", scratch("fuse_bad_r2").string(), a, renamed});
    CHECK(r.code == 3);
    CHECK(r.err.find("\"s1\"") != std::string::npos);
    CHECK(r.err.find("missing") != std::string::npos);

    const std::string relabeled = (dir / "relabeled.txt").string();
    {
        std::ofstream out(relabeled);
        out << "modality=depth\ns0,0,0.5,0.5\ns1,0,0.5,0.5\n";
    }
    r = run_cli({"fuse", "--out", scratch("fuse_bad_r3").string(), a, relabeled});
    CHECK(r.code == 3);
    CHECK(r.err.find("label") != std::string::npos);
}

TEST_CASE("gradcheck passes and reports every case") {
    const fs::path out = scratch("gradcheck_run");
    RunResult r = run_cli({"gradcheck", "--seed", "77", "--out", out.string()});
    CHECK(r.code == 0);
    const auto lines = split_lines(r.out);
    CHECK(lines.size() >= 25);
    for (const auto& line : lines) {
        CAPTURE(line);
        CHECK(line.find("PASS") != std::string::npos);
    }
    CHECK(slurp(out / "gradcheck.txt") == r.out);
}

TEST_CASE("a divergent run exits with the numeric code") {
    const fs::path data = make_dataset("diverge_data", 1, 0.1, 6, 3, 10);
    std::vector<std::string> args = {
        "train", "--out", scratch("diverge_run").string(),
        "--set", "train_manifest=" + (data / "train.manifest").string(),
        "--set", "test_manifest=" + (data / "test.manifest").string(),
        "--set", "epochs=1", "--set", "batch=2", "--set", "lr=1e200", "--seed", "1"};
    const auto mo = model_overrides();
    args.insert(args.end(), mo.begin(), mo.end());
    RunResult r = run_cli(args);
    CHECK(r.code == 4);
    CHECK(r.err.find("diverged") != std::string::npos);
}

TEST_CASE("bench reports the frozen accounting") {
    RunResult r = run_cli({"bench", "--set", "m=40", "--set", "d_in=16", "--set", "k=32",
                           "--set", "stages=2"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("[params]") != std::string::npos);
    CHECK(r.out.find("[macs]") != std::string::npos);
    CHECK(r.out.find("total = 13653") != std::string::npos);
    CHECK(r.out.find("total = 641376") != std::string::npos);
    CHECK(r.out.find("classifier = 96") != std::string::npos);

    RunResult wide = run_cli({"bench", "--set", "m=80", "--set", "d_in=16", "--set", "k=32",
                              "--set", "stages=2"});
    REQUIRE(wide.code == 0);
    CHECK(wide.out.find("embed.proj = 40960") != std::string::npos);
    CHECK(wide.out.find("classifier = 96") != std::string::npos);
}
