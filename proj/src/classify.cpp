#include "acsense/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "acsense/errors.hpp"
#include "acsense/nn/adam.hpp"
#include "acsense/rng.hpp"

namespace fs = std::filesystem;

namespace acsense {

int LabeledDataset::blank_id() const {
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        if (class_names[i] == "blank") return static_cast<int>(i);
    }
    throw EmptyDataset("dataset has no blank class");
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t s = 0;
    for (auto v : counts) s += v;
    return s;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (int i = 0; i < k; ++i) s += at(i, i);
    return s;
}

std::vector<double> ConfusionMatrix::normalized() const {
    std::vector<double> out(counts.size(), 0.0);
    for (int i = 0; i < k; ++i) {
        std::int64_t row_sum = 0;
        for (int j = 0; j < k; ++j) row_sum += at(i, j);
        if (row_sum == 0) continue;
        for (int j = 0; j < k; ++j) {
            out[static_cast<std::size_t>(i) * k + j] =
                static_cast<double>(at(i, j)) / static_cast<double>(row_sum);
        }
    }
    return out;
}

std::pair<std::vector<int>, std::vector<int>>
stratified_split(const std::vector<int>& labels, int n_classes, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidConfig("split ratio must be in (0, 1)");
    std::vector<std::vector<int>> per_class(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int c = labels[i];
        if (c < 0 || c >= n_classes) throw LabelOutOfRange("label " + std::to_string(c));
        per_class[static_cast<std::size_t>(c)].push_back(static_cast<int>(i));
    }

    std::vector<int> train, val;
    for (int c = 0; c < n_classes; ++c) {
        auto& idx = per_class[static_cast<std::size_t>(c)];
        const auto n = static_cast<std::int64_t>(idx.size());
        if (n < 2) {
            throw ClassTooSmall("class " + std::to_string(c) + " has " + std::to_string(n) +
                                " items; need >= 2 to split");
        }
        Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(c)));
        rng.shuffle(idx);
        // round-half-up, clamped so both sides keep at least one item
        std::int64_t n_train = static_cast<std::int64_t>(std::floor(ratio * n + 0.5));
        n_train = std::max<std::int64_t>(1, std::min(n - 1, n_train));
        train.insert(train.end(), idx.begin(), idx.begin() + n_train);
        val.insert(val.end(), idx.begin() + n_train, idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {std::move(train), std::move(val)};
}

namespace {

// Stack dataset items (each 1 x H x W) into one batch tensor (B, 1, H, W).
nn::TensorF stack_batch(const LabeledDataset& ds, const std::vector<int>& indices,
                        std::size_t begin, std::size_t end) {
    const auto& first = ds.features[static_cast<std::size_t>(indices[begin])];
    const std::int64_t h = first.shape[1], w = first.shape[2];
    nn::TensorF batch({static_cast<std::int64_t>(end - begin), 1, h, w});
    for (std::size_t i = begin; i < end; ++i) {
        const auto& item = ds.features[static_cast<std::size_t>(indices[i])];
        std::copy(item.data.begin(), item.data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>((i - begin) * item.data.size()));
    }
    return batch;
}

int argmax_row(const nn::TensorF& logits, std::int64_t row) {
    int best = 0;
    for (std::int64_t j = 1; j < logits.shape[1]; ++j) {
        if (logits.at2(row, j) > logits.at2(row, best)) best = static_cast<int>(j);
    }
    return best;
}

double accuracy_on(const nn::SpectrogramCnnF& model, const LabeledDataset& ds,
                   const std::vector<int>& indices, int batch_size, ConfusionMatrix* cm) {
    std::int64_t correct = 0;
    for (std::size_t b = 0; b < indices.size(); b += static_cast<std::size_t>(batch_size)) {
        const std::size_t e = std::min(indices.size(), b + static_cast<std::size_t>(batch_size));
        nn::TensorF batch = stack_batch(ds, indices, b, e);
        nn::TensorF logits = model.forward_eval(batch);
        for (std::size_t i = b; i < e; ++i) {
            const int pred = argmax_row(logits, static_cast<std::int64_t>(i - b));
            const int truth = ds.labels[static_cast<std::size_t>(indices[i])];
            if (pred == truth) ++correct;
            if (cm) ++cm->at(truth, pred);
        }
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

} // namespace

TrainResult train(const LabeledDataset& ds, nn::SpectrogramCnnF model, const TrainConfig& cfg) {
    if (ds.size() == 0) throw EmptyDataset("train: empty dataset");
    if (cfg.batch_size < 1 || cfg.epochs < 1) {
        throw InvalidConfig("train: batch_size and epochs must be >= 1");
    }
    const auto& first = ds.features.front();
    for (const auto& f : ds.features) {
        if (f.shape != first.shape) {
            throw ShapeMismatch("train: feature shapes are inconsistent (" + f.shape_str() +
                                " vs " + first.shape_str() + ")");
        }
    }
    if (model.n_classes != ds.n_classes()) {
        throw ShapeMismatch("train: model classes != dataset classes");
    }

    auto [train_idx, val_idx] = stratified_split(ds.labels, ds.n_classes(), cfg.split_ratio, cfg.seed);

    auto named_params = model.trainable();
    std::vector<nn::TensorF*> params;
    for (auto& [name, t] : named_params) params.push_back(t);
    auto adam = nn::AdamState<float>::init_like(params);

    TrainResult result;
    result.best_val_accuracy = -1.0;

    std::vector<int> order = train_idx;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.shuffle_each_epoch) {
            Rng rng(derive_seed(cfg.seed, "epoch", static_cast<std::uint64_t>(epoch)));
            rng.shuffle(order);
        }

        double loss_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            nn::TensorF batch = stack_batch(ds, order, b, e);
            std::vector<int> labels;
            labels.reserve(e - b);
            for (std::size_t i = b; i < e; ++i) labels.push_back(ds.labels[static_cast<std::size_t>(order[i])]);

            nn::SpectrogramCnnF::Cache cache;
            nn::TensorF logits = model.forward_train(batch, cache);
            auto [loss, grad_logits] = nn::softmax_cross_entropy(logits, labels);
            loss_sum += loss * static_cast<double>(e - b);

            auto grads = model.backward(grad_logits, cache);
            nn::adam_step(params, grads.list(), adam, static_cast<float>(cfg.lr));
        }

        const double train_loss = loss_sum / static_cast<double>(order.size());
        const double val_acc = accuracy_on(model, ds, val_idx, cfg.batch_size, nullptr);
        result.history.push_back({epoch, train_loss, val_acc});
        if (val_acc > result.best_val_accuracy) {
            result.best_val_accuracy = val_acc;
            result.best_epoch = epoch;
            result.best_model = model;   // deep copy, running stats included
        }
    }
    result.val_indices = std::move(val_idx);
    return result;
}

EvalResult evaluate(const nn::SpectrogramCnnF& model, const LabeledDataset& ds) {
    if (ds.size() == 0) throw EmptyDataset("evaluate: empty dataset");
    std::vector<int> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

    EvalResult res;
    res.cm.k = ds.n_classes();
    res.cm.counts.assign(static_cast<std::size_t>(res.cm.k) * res.cm.k, 0);
    res.accuracy = accuracy_on(model, ds, all, 32, &res.cm);
    return res;
}

nn::TensorF spectrogram_to_tensor(const MelSpectrogram& spec) {
    nn::TensorF t({1, spec.n_mels, spec.n_frames});
    for (std::size_t i = 0; i < spec.data.size(); ++i) t.data[i] = static_cast<float>(spec.data[i]);
    return t;
}

Prediction predict(const nn::SpectrogramCnnF& model, const MelSpectrogram& spec,
                   int blank_id, double tau) {
    if (blank_id < 0 || blank_id >= model.n_classes) {
        throw LabelOutOfRange("predict: blank_id " + std::to_string(blank_id));
    }
    nn::TensorF x({1, 1, spec.n_mels, spec.n_frames});
    for (std::size_t i = 0; i < spec.data.size(); ++i) x.data[i] = static_cast<float>(spec.data[i]);
    nn::TensorF logits = model.forward_eval(x);

    Prediction pred;
    pred.probs = nn::softmax_row(logits, 0);
    pred.class_id = 0;
    for (int j = 1; j < model.n_classes; ++j) {
        if (pred.probs[static_cast<std::size_t>(j)] > pred.probs[static_cast<std::size_t>(pred.class_id)]) {
            pred.class_id = j;
        }
    }
    pred.is_contact = pred.class_id != blank_id &&
                      (1.0 - pred.probs[static_cast<std::size_t>(blank_id)] >= tau);
    return pred;
}

std::vector<CorpusItem> scan_corpus(const std::string& root) {
    const fs::path root_path(root);
    if (!fs::is_directory(root_path)) throw IoError("corpus root is not a directory: " + root);

    std::vector<CorpusItem> items;
    const fs::path manifest = root_path / "manifest.csv";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        if (!in) throw IoError("cannot open " + manifest.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line.rfind("path,", 0) == 0) continue;   // header
            std::istringstream ss(line);
            std::string path, cls;
            if (!std::getline(ss, path, ',') || !std::getline(ss, cls, ',')) {
                throw IoError("malformed manifest line: " + line);
            }
            items.push_back({(root_path / path).string(), cls});
        }
    } else {
        for (const auto& dir : fs::directory_iterator(root_path)) {
            if (!dir.is_directory()) continue;
            const std::string cls = dir.path().filename().string();
            for (const auto& f : fs::directory_iterator(dir.path())) {
                if (f.path().extension() == ".wav") {
                    items.push_back({f.path().string(), cls});
                }
            }
        }
    }
    std::sort(items.begin(), items.end(), [](const CorpusItem& a, const CorpusItem& b) {
        return a.class_name != b.class_name ? a.class_name < b.class_name : a.path < b.path;
    });
    return items;
}

LabeledDataset featurize_corpus(const std::vector<CorpusItem>& items,
                                const FeatureConfig& features, const FramingConfig& framing) {
    LabeledDataset ds;

    // Lexicographic class order with "blank" forced to index 0.
    std::map<std::string, int> class_ids;
    for (const auto& item : items) class_ids.emplace(item.class_name, 0);
    ds.class_names.reserve(class_ids.size());
    if (class_ids.count("blank")) ds.class_names.push_back("blank");
    for (const auto& [name, _] : class_ids) {
        if (name != "blank") ds.class_names.push_back(name);
    }
    for (std::size_t i = 0; i < ds.class_names.size(); ++i) {
        class_ids[ds.class_names[i]] = static_cast<int>(i);
    }

    Featurizer featurizer(features);
    for (const auto& item : items) {
        const AudioClip clip = read_wav(item.path);
        for (const Window& w : segment(clip, framing)) {
            MelSpectrogram spec = featurizer.process(w.samples, clip.sample_rate_hz);
            ds.features.push_back(spectrogram_to_tensor(spec));
            ds.labels.push_back(class_ids.at(item.class_name));
        }
    }
    return ds;
}

std::string render_confusion_table(const ConfusionMatrix& cm,
                                   const std::vector<std::string>& class_names) {
    const auto norm = cm.normalized();
    std::size_t name_w = 4;
    for (const auto& n : class_names) name_w = std::max(name_w, n.size());

    std::ostringstream os;
    os << std::string(name_w, ' ');
    for (int j = 0; j < cm.k; ++j) {
        std::string n = class_names[static_cast<std::size_t>(j)].substr(0, 6);
        os << " " << std::string(6 - n.size(), ' ') << n;
    }
    os << "\n";
    for (int i = 0; i < cm.k; ++i) {
        const std::string& n = class_names[static_cast<std::size_t>(i)];
        os << n << std::string(name_w - n.size(), ' ');
        for (int j = 0; j < cm.k; ++j) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), " %6.2f", norm[static_cast<std::size_t>(i) * cm.k + j]);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

} // namespace acsense
