#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acsense/features.hpp"
#include "acsense/nn/checkpoint.hpp"
#include "acsense/nn/model.hpp"

namespace acsense {

// Labeled feature windows. Class names are ordered lexicographically with
// "blank" forced to index 0, so the blank id is stable across corpora.
struct LabeledDataset {
    std::vector<nn::TensorF> features;   // each (1, n_mels, n_frames)
    std::vector<int> labels;
    std::vector<std::string> class_names;

    std::size_t size() const { return features.size(); }
    int n_classes() const { return static_cast<int>(class_names.size()); }
    int blank_id() const;   // index of "blank"; throws EmptyDataset if absent
};

struct TrainConfig {
    double lr = 3e-4;
    int batch_size = 32;
    int epochs = 2000;
    double split_ratio = 0.8;
    std::uint64_t seed = 0;
    bool shuffle_each_epoch = true;
};

struct ConfusionMatrix {
    int k = 0;
    std::vector<std::int64_t> counts;   // k x k row-major, rows = true class

    std::int64_t at(int true_c, int pred_c) const { return counts[static_cast<std::size_t>(true_c) * k + pred_c]; }
    std::int64_t& at(int true_c, int pred_c) { return counts[static_cast<std::size_t>(true_c) * k + pred_c]; }
    std::int64_t total() const;
    std::int64_t trace() const;
    // Rows divided by their sums; empty rows stay all-zero.
    std::vector<double> normalized() const;
};

struct Prediction {
    int class_id = 0;
    std::vector<double> probs;
    bool is_contact = false;
};

// Per class: train takes round-half-up(ratio * n_c) items, clamped to
// [1, n_c - 1]; selection is a seeded shuffle within the class. Returns
// (train_indices, val_indices) into the dataset.
std::pair<std::vector<int>, std::vector<int>>
stratified_split(const std::vector<int>& labels, int n_classes, double ratio, std::uint64_t seed);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    nn::SpectrogramCnnF best_model;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_val_accuracy = 0.0;
    std::vector<int> val_indices;
};

// The training loop: per epoch, shuffle, minibatch (last partial batch
// kept), forward/loss/backward/Adam; the checkpoint with the highest
// validation accuracy wins, earliest epoch on ties.
TrainResult train(const LabeledDataset& ds, nn::SpectrogramCnnF model, const TrainConfig& cfg);

struct EvalResult {
    double accuracy = 0.0;
    ConfusionMatrix cm;
};

EvalResult evaluate(const nn::SpectrogramCnnF& model, const LabeledDataset& ds);

// Softmax over the window's logits; is_contact requires both a non-blank
// argmax and 1 - probs[blank] >= tau.
Prediction predict(const nn::SpectrogramCnnF& model, const MelSpectrogram& spec,
                   int blank_id, double tau);

nn::TensorF spectrogram_to_tensor(const MelSpectrogram& spec);

// Corpus layout: root/<class_name>/*.wav, or a manifest.csv (path,class)
// at the root which overrides the directory scan.
struct CorpusItem {
    std::string path;
    std::string class_name;
};

std::vector<CorpusItem> scan_corpus(const std::string& root);

LabeledDataset featurize_corpus(const std::vector<CorpusItem>& items,
                                const FeatureConfig& features, const FramingConfig& framing);

std::string render_confusion_table(const ConfusionMatrix& cm,
                                   const std::vector<std::string>& class_names);

} // namespace acsense
