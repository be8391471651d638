#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "gestformer/data_io.hpp"
#include "gestformer/fusion.hpp"
#include "gestformer/model.hpp"

namespace gestformer {

struct TrainOptions {
    std::int64_t epochs = 100;
    std::int64_t batch = 8;
    double lr = 1e-4;
    bool lr_decay = true; // x0.1 after epochs 50 and 75
    std::uint64_t seed = 0;
};

// A single-modality dataset held in memory.
struct LoadedSet {
    std::vector<Tensor> features;
    std::vector<int> labels;
    std::vector<std::string> ids;

    std::size_t size() const { return features.size(); }
};

// Loads every manifest entry; the manifest must already be filtered to one
// modality. ConfigError if a file's extents do not match the model config;
// InputError on labels outside [0, n).
LoadedSet load_set(const Manifest& manifest, const ModelConfig& cfg);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::vector<std::int64_t>> confusion; // [true][predicted]
    std::vector<PosteriorRecord> posteriors;          // one per sample, set order
};

EvalResult evaluate(const GestFormerModel& model, const LoadedSet& set);

struct EpochStats {
    std::int64_t epoch = 0;
    double loss = 0.0; // mean cross-entropy over the epoch's samples
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct TrainResult {
    GestFormerModel model;
    std::vector<EpochStats> history;
};

// The full recipe: per-sample backward passes averaged over each batch, one
// Adam step per batch, epoch-level shuffling, step decay of the rate. One
// "epoch,loss,train_acc,test_acc" line per epoch goes to metrics when given.
// NumericError names the first non-finite parameter if the run diverges.
TrainResult train_model(const ModelConfig& mcfg, const TrainOptions& opt,
                        const LoadedSet& train_set, const LoadedSet& test_set,
                        std::ostream* metrics);

std::string format_epoch_line(const EpochStats& s);

} // namespace gestformer
