#pragma once

#include <string>
#include <vector>

#include "gestformer/tensor.hpp"

namespace gestformer {

struct ModalityPosterior {
    std::string modality;
    Tensor probs; // [n]
};

// Argmax over classes of the summed per-modality posteriors. Ties go to the
// lowest class index. The sum is order-independent up to floating-point
// association, so inputs are accumulated in the given order; permuting
// modalities cannot change the argmax for the tolerance the tests use.
// InputError on an empty list or mismatched class counts.
int late_fuse(const std::vector<ModalityPosterior>& posteriors);

// One evaluated sample: id, true label (-1 if unknown), class probabilities.
struct PosteriorRecord {
    std::string id;
    int label = -1;
    std::vector<double> probs;
};

// Plain-text posterior files: "modality=<name>" header, then one
// "id,label,p0,...,p{n-1}" line per sample.
void save_posteriors(const std::string& path, const std::string& modality,
                     const std::vector<PosteriorRecord>& records);

struct PosteriorFile {
    std::string modality;
    std::vector<PosteriorRecord> records;
};

// Rejects malformed lines, ragged class counts, and rows that are not
// probability vectors (sum within 1e-9 of 1).
PosteriorFile load_posteriors(const std::string& path);

} // namespace gestformer
