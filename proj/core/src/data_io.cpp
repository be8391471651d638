#include "gestformer/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "gestformer/rng.hpp"

namespace fs = std::filesystem;

namespace gestformer {

namespace {

constexpr char kMagic[4] = {'M', 'W', 'F', 'S'};
constexpr std::uint32_t kVersion = 1;

} // namespace

void save_feature_file(const std::string& path, const FeatureSequenceFile& f) {
    if (f.features.rank() != 2) {
        throw DimensionError("feature file: expected rank 2 features, got " +
                             f.features.shape.str());
    }
    binio::Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.i64(f.features.dim(0));
    w.i64(f.features.dim(1));
    w.str(f.modality);
    w.i32(f.label);
    for (double v : f.features.data) w.f64(v);
    w.close();
}

FeatureSequenceFile load_feature_file(const std::string& path) {
    binio::Reader r(path);
    char magic[4];
    r.bytes(magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kMagic)) {
        throw FormatError(path + ": bad magic at byte 0, expected \"MWFS\"");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw FormatError(path + ": unsupported version " + std::to_string(version) +
                          " at byte 4, expected " + std::to_string(kVersion));
    }
    const std::int64_t m = r.i64("m");
    const std::int64_t d_in = r.i64("d_in");
    if (m < 1 || d_in < 1) {
        throw FormatError(path + ": non-positive extents " + std::to_string(m) + "x" +
                          std::to_string(d_in));
    }
    FeatureSequenceFile f;
    f.modality = r.str("modality name");
    f.label = r.i32("label");
    const std::size_t expected = static_cast<std::size_t>(m * d_in) * 8;
    if (r.remaining() != expected) {
        throw FormatError(path + ": payload is " + std::to_string(r.remaining()) +
                          " bytes, expected " + std::to_string(expected) + " (" +
                          std::to_string(m) + "x" + std::to_string(d_in) + " doubles)");
    }
    f.features = Tensor::zeros(Shape{m, d_in});
    for (double& v : f.features.data) v = r.f64("payload");
    r.expect_end();
    return f;
}

void SyntheticSpec::validate() const {
    if (classes < 2) throw ConfigError("gen: classes must be >= 2, got " + std::to_string(classes));
    if (m < 2) throw ConfigError("gen: frames must be >= 2, got " + std::to_string(m));
    if (d_in < 1) throw ConfigError("gen: dim must be >= 1, got " + std::to_string(d_in));
    if (modalities < 1) {
        throw ConfigError("gen: modalities must be >= 1, got " + std::to_string(modalities));
    }
    if (sigma < 0.0) throw ConfigError("gen: sigma must be >= 0, got " + std::to_string(sigma));
    if (train_samples < 1 || test_samples < 1) {
        throw ConfigError("gen: sample counts must be >= 1, got " +
                          std::to_string(train_samples) + "/" + std::to_string(test_samples));
    }
}

namespace {

// Gram-Schmidt on a Gaussian matrix: a uniformly random rotation up to sign.
std::vector<double> random_orthogonal(std::int64_t d, Rng& rng) {
    std::vector<double> q(static_cast<std::size_t>(d * d));
    for (double& v : q) v = rng.gaussian();
    for (std::int64_t i = 0; i < d; ++i) {
        double* qi = q.data() + i * d;
        for (std::int64_t j = 0; j < i; ++j) {
            const double* qj = q.data() + j * d;
            double dot = 0.0;
            for (std::int64_t c = 0; c < d; ++c) dot += qi[c] * qj[c];
            for (std::int64_t c = 0; c < d; ++c) qi[c] -= dot * qj[c];
        }
        double norm = 0.0;
        for (std::int64_t c = 0; c < d; ++c) norm += qi[c] * qi[c];
        norm = std::sqrt(norm);
        // Degenerate draws are measure-zero; fall back to a unit vector.
        if (norm < 1e-12) {
            for (std::int64_t c = 0; c < d; ++c) qi[c] = (c == i % d) ? 1.0 : 0.0;
        } else {
            for (std::int64_t c = 0; c < d; ++c) qi[c] /= norm;
        }
    }
    return q;
}

std::string index_name(const char* split, std::int64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04lld", split, static_cast<long long>(i));
    return buf;
}

} // namespace

void gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    spec.validate();
    fs::create_directories(out_dir);
    Rng rng(spec.seed);

    // Class prototypes: per feature dimension a sinusoid with class-specific
    // frequency, phase, and amplitude. Non-integer frequencies keep the
    // time-mean informative as well as the trajectory.
    std::vector<Tensor> protos;
    for (std::int64_t c = 0; c < spec.classes; ++c) {
        Tensor p = Tensor::zeros(Shape{spec.m, spec.d_in});
        for (std::int64_t d = 0; d < spec.d_in; ++d) {
            const double freq = rng.uniform(0.5, 3.0);
            const double phase = rng.uniform(0.0, 6.283185307179586);
            const double amp = rng.uniform(0.5, 1.5);
            for (std::int64_t t = 0; t < spec.m; ++t) {
                p.at(t, d) = amp * std::sin(6.283185307179586 * freq * static_cast<double>(t) /
                                                static_cast<double>(spec.m) +
                                            phase);
            }
        }
        protos.push_back(std::move(p));
    }

    // Modality 0 is the undistorted view; the rest are fixed orthogonal
    // feature mixes, so class geometry is preserved per modality.
    std::vector<std::vector<double>> mixes;
    for (std::int64_t q = 1; q < spec.modalities; ++q) {
        mixes.push_back(random_orthogonal(spec.d_in, rng));
    }

    const auto emit_split = [&](const char* split, std::int64_t count) {
        Manifest mf;
        for (std::int64_t i = 0; i < count; ++i) {
            const int label = static_cast<int>(i % spec.classes);
            const Tensor& proto = protos[static_cast<std::size_t>(label)];
            for (std::int64_t q = 0; q < spec.modalities; ++q) {
                Tensor x = Tensor::zeros(Shape{spec.m, spec.d_in});
                if (q == 0) {
                    x.data = proto.data;
                } else {
                    const std::vector<double>& mix = mixes[static_cast<std::size_t>(q - 1)];
                    for (std::int64_t t = 0; t < spec.m; ++t) {
                        for (std::int64_t a = 0; a < spec.d_in; ++a) {
                            double acc = 0.0;
                            for (std::int64_t b = 0; b < spec.d_in; ++b) {
                                acc += mix[static_cast<std::size_t>(a * spec.d_in + b)] *
                                       proto.at(t, b);
                            }
                            x.at(t, a) = acc;
                        }
                    }
                }
                if (spec.sigma > 0.0) {
                    for (double& v : x.data) v += rng.gaussian(0.0, spec.sigma);
                }
                const std::string modality = "mod" + std::to_string(q);
                const std::string file = index_name(split, i) + "__" + modality + ".mwfs";
                save_feature_file((fs::path(out_dir) / file).string(),
                                  FeatureSequenceFile{modality, label, std::move(x)});
                mf.entries.push_back({file, label, modality});
            }
        }
        save_manifest((fs::path(out_dir) / (std::string(split) + ".manifest")).string(), mf);
    };

    emit_split("train", spec.train_samples);
    emit_split("test", spec.test_samples);
}

std::vector<std::string> Manifest::modalities() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        bool seen = false;
        for (const auto& m : out) seen = seen || m == e.modality;
        if (!seen) out.push_back(e.modality);
    }
    return out;
}

Manifest Manifest::filter_modality(const std::string& modality) const {
    Manifest out;
    for (const auto& e : entries) {
        if (e.modality == modality) out.entries.push_back(e);
    }
    return out;
}

void save_manifest(const std::string& path, const Manifest& m) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open for writing: " + path);
    for (const auto& e : m.entries) {
        out << e.path << "," << e.label << "," << e.modality << "\n";
    }
    if (!out) throw InputError("write failed: " + path);
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open: " + path);
    const fs::path base = fs::path(path).parent_path();
    Manifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = (c1 == std::string::npos) ? std::string::npos
                                                         : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw FormatError(path + ":" + std::to_string(lineno) +
                              ": expected path,label,modality got \"" + line + "\"");
        }
        ManifestEntry e;
        e.path = line.substr(0, c1);
        const std::string label = line.substr(c1 + 1, c2 - c1 - 1);
        std::size_t used = 0;
        try {
            e.label = std::stoi(label, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != label.size()) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad label \"" + label +
                              "\"");
        }
        e.modality = line.substr(c2 + 1);
        if (fs::path(e.path).is_relative()) e.path = (base / e.path).string();
        m.entries.push_back(std::move(e));
    }
    return m;
}

std::string sample_id_of(const std::string& path) {
    std::string stem = fs::path(path).stem().string();
    const std::size_t sep = stem.find("__");
    return (sep == std::string::npos) ? stem : stem.substr(0, sep);
}

} // namespace gestformer
