#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acsense/nn/ops.hpp"
#include "acsense/rng.hpp"

namespace acsense::nn {

// Compact 2D CNN over single-channel log-mel spectrograms: three stride-2
// Conv-BN-ReLU blocks (1->16->32->64), global average pooling, and a linear
// classifier. Pooling absorbs the time extent, so any n_frames >= 1 works.
template <typename T>
struct SpectrogramCnn {
    Conv2dLayer<T> conv1, conv2, conv3;
    BatchNorm2dLayer<T> bn1, bn2, bn3;
    LinearLayer<T> fc;
    int n_classes = 0;

    static constexpr int kChannels[3] = {16, 32, 64};

    struct Cache {
        Conv2dCache<T> conv1, conv2, conv3;
        BatchNormCache<T> bn1, bn2, bn3;
        Tensor<T> pre1, pre2, pre3;   // BN outputs, saved for the ReLU gate
        std::int64_t pool_h = 0, pool_w = 0;
        LinearCache<T> fc;
    };

    struct Grads {
        Tensor<T> conv1_w, conv1_b, bn1_gamma, bn1_beta;
        Tensor<T> conv2_w, conv2_b, bn2_gamma, bn2_beta;
        Tensor<T> conv3_w, conv3_b, bn3_gamma, bn3_beta;
        Tensor<T> fc_w, fc_b;

        std::vector<const Tensor<T>*> list() const {
            return {&conv1_w, &conv1_b, &bn1_gamma, &bn1_beta,
                    &conv2_w, &conv2_b, &bn2_gamma, &bn2_beta,
                    &conv3_w, &conv3_b, &bn3_gamma, &bn3_beta,
                    &fc_w,    &fc_b};
        }
    };

    // Kaiming-uniform fan-in init for conv/linear weights, zero biases,
    // gamma 1 / beta 0, running stats (0, 1).
    static SpectrogramCnn random_init(int n_classes, std::uint64_t seed) {
        SpectrogramCnn net;
        net.n_classes = n_classes;
        Rng rng(derive_seed(seed, "model-init", 0));
        init_conv(net.conv1, 1, kChannels[0], rng);
        init_conv(net.conv2, kChannels[0], kChannels[1], rng);
        init_conv(net.conv3, kChannels[1], kChannels[2], rng);
        init_bn(net.bn1, kChannels[0]);
        init_bn(net.bn2, kChannels[1]);
        init_bn(net.bn3, kChannels[2]);
        net.fc.weight = Tensor<T>({n_classes, kChannels[2]});
        net.fc.bias = Tensor<T>({n_classes});
        const double bound = std::sqrt(6.0 / kChannels[2]);
        for (auto& v : net.fc.weight.data) v = static_cast<T>(rng.uniform(-bound, bound));
        return net;
    }

    // Trainable parameters plus BN running-stat buffers, in a pinned order
    // shared by the optimizer and the checkpoint format.
    std::vector<std::pair<std::string, Tensor<T>*>> trainable() {
        return {{"conv1.weight", &conv1.weight}, {"conv1.bias", &conv1.bias},
                {"bn1.gamma", &bn1.gamma},       {"bn1.beta", &bn1.beta},
                {"conv2.weight", &conv2.weight}, {"conv2.bias", &conv2.bias},
                {"bn2.gamma", &bn2.gamma},       {"bn2.beta", &bn2.beta},
                {"conv3.weight", &conv3.weight}, {"conv3.bias", &conv3.bias},
                {"bn3.gamma", &bn3.gamma},       {"bn3.beta", &bn3.beta},
                {"fc.weight", &fc.weight},       {"fc.bias", &fc.bias}};
    }

    std::vector<std::pair<std::string, Tensor<T>*>> buffers() {
        return {{"bn1.running_mean", &bn1.running_mean}, {"bn1.running_var", &bn1.running_var},
                {"bn2.running_mean", &bn2.running_mean}, {"bn2.running_var", &bn2.running_var},
                {"bn3.running_mean", &bn3.running_mean}, {"bn3.running_var", &bn3.running_var}};
    }

    // Train-mode forward; mutates BN running stats and fills the cache.
    Tensor<T> forward_train(const Tensor<T>& x, Cache& cache) {
        Tensor<T> h = conv2d_forward(x, conv1, &cache.conv1);
        cache.pre1 = batchnorm2d_forward(h, bn1, Mode::train, &cache.bn1);
        h = relu_forward(cache.pre1);

        h = conv2d_forward(h, conv2, &cache.conv2);
        cache.pre2 = batchnorm2d_forward(h, bn2, Mode::train, &cache.bn2);
        h = relu_forward(cache.pre2);

        h = conv2d_forward(h, conv3, &cache.conv3);
        cache.pre3 = batchnorm2d_forward(h, bn3, Mode::train, &cache.bn3);
        h = relu_forward(cache.pre3);

        cache.pool_h = h.shape[2];
        cache.pool_w = h.shape[3];
        Tensor<T> pooled = adaptive_avg_pool_forward(h);
        Tensor<T> flat({pooled.shape[0], pooled.shape[1]});
        flat.data = pooled.data;
        return linear_forward(flat, fc, &cache.fc);
    }

    // Eval-mode forward; read-only, safe to call concurrently on one handle.
    Tensor<T> forward_eval(const Tensor<T>& x) const {
        Tensor<T> h = conv2d_forward(x, conv1);
        h = relu_forward(batchnorm2d_eval(h, bn1));
        h = conv2d_forward(h, conv2);
        h = relu_forward(batchnorm2d_eval(h, bn2));
        h = conv2d_forward(h, conv3);
        h = relu_forward(batchnorm2d_eval(h, bn3));
        Tensor<T> pooled = adaptive_avg_pool_forward(h);
        Tensor<T> flat({pooled.shape[0], pooled.shape[1]});
        flat.data = pooled.data;
        return linear_forward(flat, fc);
    }

    Grads backward(const Tensor<T>& grad_logits, const Cache& cache) {
        Grads g;
        Tensor<T> gx;
        std::tie(gx, g.fc_w, g.fc_b) = linear_backward(grad_logits, fc, cache.fc);

        Tensor<T> gpool({gx.shape[0], gx.shape[1], 1, 1});
        gpool.data = gx.data;
        Tensor<T> h = adaptive_avg_pool_backward(gpool, cache.pool_h, cache.pool_w);

        h = relu_backward(h, cache.pre3);
        std::tie(h, g.bn3_gamma, g.bn3_beta) = batchnorm2d_backward(h, bn3, cache.bn3);
        std::tie(h, g.conv3_w, g.conv3_b) = conv2d_backward(h, conv3, cache.conv3);

        h = relu_backward(h, cache.pre2);
        std::tie(h, g.bn2_gamma, g.bn2_beta) = batchnorm2d_backward(h, bn2, cache.bn2);
        std::tie(h, g.conv2_w, g.conv2_b) = conv2d_backward(h, conv2, cache.conv2);

        h = relu_backward(h, cache.pre1);
        std::tie(h, g.bn1_gamma, g.bn1_beta) = batchnorm2d_backward(h, bn1, cache.bn1);
        std::tie(h, g.conv1_w, g.conv1_b) = conv2d_backward(h, conv1, cache.conv1);
        return g;
    }

private:
    static void init_conv(Conv2dLayer<T>& layer, int c_in, int c_out, Rng& rng) {
        layer.weight = Tensor<T>({c_out, c_in, 3, 3});
        layer.bias = Tensor<T>({c_out});
        layer.stride = 2;
        layer.padding = 1;
        const double bound = std::sqrt(6.0 / (c_in * 9));
        for (auto& v : layer.weight.data) v = static_cast<T>(rng.uniform(-bound, bound));
    }

    static void init_bn(BatchNorm2dLayer<T>& layer, int c) {
        layer.gamma = Tensor<T>({c});
        layer.beta = Tensor<T>({c});
        layer.running_mean = Tensor<T>({c});
        layer.running_var = Tensor<T>({c});
        for (auto& v : layer.gamma.data) v = T(1);
        for (auto& v : layer.running_var.data) v = T(1);
    }
};

using SpectrogramCnnF = SpectrogramCnn<float>;

} // namespace acsense::nn
