#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gestformer/tensor.hpp"

namespace gestformer {

// One stored feature sequence: the ingestion boundary of the pipeline
// (features stand in for a frozen upstream extractor).
struct FeatureSequenceFile {
    std::string modality;
    std::int32_t label = -1; // -1 = unlabeled
    Tensor features;         // [m x d_in]
};

// Binary layout: magic "MWFS", version u32, m i64, d_in i64, modality name
// (u32 length + bytes), label i32, then m*d_in row-major little-endian
// doubles. Round-trips are bitwise exact.
void save_feature_file(const std::string& path, const FeatureSequenceFile& f);
FeatureSequenceFile load_feature_file(const std::string& path);

struct SyntheticSpec {
    std::int64_t classes = 3;
    std::int64_t m = 40;
    std::int64_t d_in = 16;
    std::int64_t modalities = 1;
    double sigma = 0.3;
    std::int64_t train_samples = 288; // 80/20 of the default 360 total
    std::int64_t test_samples = 72;
    std::uint64_t seed = 0;

    void validate() const;
};

// Writes <split>_<index>__<modality>.mwfs files plus train.manifest and
// test.manifest into out_dir. Each class has a smooth sinusoidal prototype;
// modality 0 sees it unchanged, the others through fixed random orthogonal
// feature distortions; samples add Gaussian noise sigma. Labels are balanced
// per split. Deterministic given the seed.
void gen_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

struct ManifestEntry {
    std::string path; // resolved against the manifest directory on load
    int label = -1;
    std::string modality;
};

struct Manifest {
    std::vector<ManifestEntry> entries;

    std::vector<std::string> modalities() const; // distinct, in first-seen order
    Manifest filter_modality(const std::string& modality) const;
};

// One "path,label,modality" line per sample.
void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

// Sample identity shared by the modality files of one recording:
// the file stem up to the "__" separator.
std::string sample_id_of(const std::string& path);

} // namespace gestformer
