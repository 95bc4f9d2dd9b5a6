#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "acsense/nn/tensor.hpp"

namespace acsense::nn {

enum class Mode { train, eval };

// ---------------------------------------------------------------------------
// Row-major GEMM kernels. The i-k-j ordering keeps the inner loop streaming
// over contiguous memory so the compiler can vectorize it.
// ---------------------------------------------------------------------------

// C (m x n) += A (m x k) * B (k x n)
template <typename T>
void gemm(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const T aval = arow[p];
            const T* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += aval * brow[j];
        }
    }
}

// C (m x k) += A (m x n) * B^T, where B is (k x n)
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::int64_t m, std::int64_t n, std::int64_t k) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const T* brow = b + p * n;
            T acc = T(0);
            for (std::int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            c[i * k + p] += acc;
        }
    }
}

// C (k x n) += A^T * B, where A is (m x k) and B is (m x n)
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
    for (std::int64_t p = 0; p < m; ++p) {
        const T* arow = a + p * k;
        const T* brow = b + p * n;
        for (std::int64_t i = 0; i < k; ++i) {
            const T aval = arow[i];
            T* crow = c + i * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += aval * brow[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Conv2d, 3x3 kernels; the layer pins stride 2 / padding 1 (downsampling is
// done by the convolutions themselves), the ops accept any stride/padding.
// ---------------------------------------------------------------------------

template <typename T>
struct Conv2dLayer {
    Tensor<T> weight;   // (C_out, C_in, kh, kw)
    Tensor<T> bias;     // (C_out)
    int stride = 2;
    int padding = 1;

    std::int64_t c_out() const { return weight.shape[0]; }
    std::int64_t c_in() const { return weight.shape[1]; }
    std::int64_t kh() const { return weight.shape[2]; }
    std::int64_t kw() const { return weight.shape[3]; }
};

inline std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

// Gathers one sample's receptive fields into col (K x out_h*out_w) with
// K = C_in*kh*kw; out-of-bounds taps contribute zero.
template <typename T>
void im2col(const T* x, std::int64_t c_in, std::int64_t h, std::int64_t w,
            std::int64_t kh, std::int64_t kw, int stride, int pad,
            std::int64_t out_h, std::int64_t out_w, T* col) {
    const std::int64_t span = out_h * out_w;
    for (std::int64_t c = 0; c < c_in; ++c) {
        for (std::int64_t ki = 0; ki < kh; ++ki) {
            for (std::int64_t kj = 0; kj < kw; ++kj) {
                T* dst = col + ((c * kh + ki) * kw + kj) * span;
                for (std::int64_t oh = 0; oh < out_h; ++oh) {
                    const std::int64_t ih = oh * stride - pad + ki;
                    for (std::int64_t ow = 0; ow < out_w; ++ow) {
                        const std::int64_t iw = ow * stride - pad + kj;
                        T v = T(0);
                        if (ih >= 0 && ih < h && iw >= 0 && iw < w) {
                            v = x[(c * h + ih) * w + iw];
                        }
                        dst[oh * out_w + ow] = v;
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, std::int64_t c_in, std::int64_t h, std::int64_t w,
                std::int64_t kh, std::int64_t kw, int stride, int pad,
                std::int64_t out_h, std::int64_t out_w, T* x) {
    const std::int64_t span = out_h * out_w;
    for (std::int64_t c = 0; c < c_in; ++c) {
        for (std::int64_t ki = 0; ki < kh; ++ki) {
            for (std::int64_t kj = 0; kj < kw; ++kj) {
                const T* src = col + ((c * kh + ki) * kw + kj) * span;
                for (std::int64_t oh = 0; oh < out_h; ++oh) {
                    const std::int64_t ih = oh * stride - pad + ki;
                    if (ih < 0 || ih >= h) continue;
                    for (std::int64_t ow = 0; ow < out_w; ++ow) {
                        const std::int64_t iw = ow * stride - pad + kj;
                        if (iw < 0 || iw >= w) continue;
                        x[(c * h + ih) * w + iw] += src[oh * out_w + ow];
                    }
                }
            }
        }
    }
}

template <typename T>
struct Conv2dCache {
    Tensor<T> x;    // saved input
};

// Cross-correlation semantics (no kernel flip).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Conv2dLayer<T>& layer,
                         Conv2dCache<T>* cache = nullptr) {
    require_rank(x, 4, "conv2d input");
    if (x.shape[1] != layer.c_in()) {
        throw ShapeMismatch("conv2d: input channels " + x.shape_str() + " do not match layer");
    }
    const std::int64_t n = x.shape[0], h = x.shape[2], w = x.shape[3];
    const std::int64_t out_h = conv_out_extent(h, layer.kh(), layer.stride, layer.padding);
    const std::int64_t out_w = conv_out_extent(w, layer.kw(), layer.stride, layer.padding);
    if (out_h < 1 || out_w < 1) {
        throw ShapeMismatch("conv2d: input " + x.shape_str() + " too small for kernel");
    }

    const std::int64_t kdim = layer.c_in() * layer.kh() * layer.kw();
    const std::int64_t span = out_h * out_w;
    Tensor<T> y({n, layer.c_out(), out_h, out_w});
    std::vector<T> col(static_cast<std::size_t>(kdim * span));

    for (std::int64_t i = 0; i < n; ++i) {
        im2col(x.data.data() + i * layer.c_in() * h * w, layer.c_in(), h, w,
               layer.kh(), layer.kw(), layer.stride, layer.padding, out_h, out_w, col.data());
        T* yblock = y.data.data() + i * layer.c_out() * span;
        gemm(layer.weight.data.data(), col.data(), yblock, layer.c_out(), kdim, span);
        for (std::int64_t co = 0; co < layer.c_out(); ++co) {
            const T b = layer.bias.data[static_cast<std::size_t>(co)];
            T* row = yblock + co * span;
            for (std::int64_t j = 0; j < span; ++j) row[j] += b;
        }
    }
    if (cache) cache->x = x;
    return y;
}

template <typename T>
std::tuple<Tensor<T>, Tensor<T>, Tensor<T>>
conv2d_backward(const Tensor<T>& grad_y, const Conv2dLayer<T>& layer, const Conv2dCache<T>& cache) {
    const Tensor<T>& x = cache.x;
    const std::int64_t n = x.shape[0], h = x.shape[2], w = x.shape[3];
    const std::int64_t out_h = grad_y.shape[2], out_w = grad_y.shape[3];
    const std::int64_t kdim = layer.c_in() * layer.kh() * layer.kw();
    const std::int64_t span = out_h * out_w;

    Tensor<T> grad_x(x.shape);
    Tensor<T> grad_w(layer.weight.shape);
    Tensor<T> grad_b(layer.bias.shape);
    std::vector<T> col(static_cast<std::size_t>(kdim * span));
    std::vector<T> grad_col(static_cast<std::size_t>(kdim * span));

    for (std::int64_t i = 0; i < n; ++i) {
        const T* gy = grad_y.data.data() + i * layer.c_out() * span;

        for (std::int64_t co = 0; co < layer.c_out(); ++co) {
            T acc = T(0);
            const T* row = gy + co * span;
            for (std::int64_t j = 0; j < span; ++j) acc += row[j];
            grad_b.data[static_cast<std::size_t>(co)] += acc;
        }

        im2col(x.data.data() + i * layer.c_in() * h * w, layer.c_in(), h, w,
               layer.kh(), layer.kw(), layer.stride, layer.padding, out_h, out_w, col.data());
        gemm_nt(gy, col.data(), grad_w.data.data(), layer.c_out(), span, kdim);

        std::fill(grad_col.begin(), grad_col.end(), T(0));
        gemm_tn(layer.weight.data.data(), gy, grad_col.data(), layer.c_out(), kdim, span);
        col2im_add(grad_col.data(), layer.c_in(), h, w, layer.kh(), layer.kw(),
                   layer.stride, layer.padding, out_h, out_w,
                   grad_x.data.data() + i * layer.c_in() * h * w);
    }
    return {std::move(grad_x), std::move(grad_w), std::move(grad_b)};
}

// ---------------------------------------------------------------------------
// BatchNorm2d. Train mode normalizes with biased per-channel batch statistics
// over N*H*W and folds them into the running estimates with momentum 0.1;
// eval mode uses the running estimates.
// ---------------------------------------------------------------------------

template <typename T>
struct BatchNorm2dLayer {
    Tensor<T> gamma;          // (C)
    Tensor<T> beta;           // (C)
    Tensor<T> running_mean;   // (C)
    Tensor<T> running_var;    // (C)
    T eps = T(1e-5);
    T momentum = T(0.1);
};

template <typename T>
struct BatchNormCache {
    Tensor<T> x_hat;
    std::vector<T> inv_std;   // per channel
};

// Eval-mode normalization with the running estimates; read-only.
template <typename T>
Tensor<T> batchnorm2d_eval(const Tensor<T>& x, const BatchNorm2dLayer<T>& layer) {
    require_rank(x, 4, "batchnorm input");
    const std::int64_t n = x.shape[0], c = x.shape[1];
    if (c != layer.gamma.numel()) {
        throw ShapeMismatch("batchnorm: channel count " + x.shape_str() + " does not match layer");
    }
    const std::int64_t plane = x.shape[2] * x.shape[3];
    Tensor<T> y(x.shape);
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const T inv = T(1) / std::sqrt(layer.running_var.data[ch] + layer.eps);
        const T g = layer.gamma.data[ch] * inv;
        const T off = layer.beta.data[ch] - layer.running_mean.data[ch] * g;
        for (std::int64_t i = 0; i < n; ++i) {
            const T* xp = x.data.data() + (i * c + ch) * plane;
            T* yp = y.data.data() + (i * c + ch) * plane;
            for (std::int64_t j = 0; j < plane; ++j) yp[j] = g * xp[j] + off;
        }
    }
    return y;
}

template <typename T>
Tensor<T> batchnorm2d_forward(const Tensor<T>& x, BatchNorm2dLayer<T>& layer, Mode mode,
                              BatchNormCache<T>* cache = nullptr) {
    require_rank(x, 4, "batchnorm input");
    const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
    if (c != layer.gamma.numel()) {
        throw ShapeMismatch("batchnorm: channel count " + x.shape_str() + " does not match layer");
    }
    const std::int64_t plane = h * w;
    const std::int64_t m = n * plane;
    Tensor<T> y(x.shape);

    if (mode == Mode::eval) {
        return batchnorm2d_eval(x, layer);
    }

    if (cache) {
        cache->x_hat = Tensor<T>(x.shape);
        cache->inv_std.assign(static_cast<std::size_t>(c), T(0));
    }
    for (std::int64_t ch = 0; ch < c; ++ch) {
        T sum = T(0), sq = T(0);
        for (std::int64_t i = 0; i < n; ++i) {
            const T* xp = x.data.data() + (i * c + ch) * plane;
            for (std::int64_t j = 0; j < plane; ++j) {
                sum += xp[j];
                sq += xp[j] * xp[j];
            }
        }
        const T mean = sum / static_cast<T>(m);
        T var = sq / static_cast<T>(m) - mean * mean;
        if (var < T(0)) var = T(0);
        const T inv = T(1) / std::sqrt(var + layer.eps);

        layer.running_mean.data[ch] =
            (T(1) - layer.momentum) * layer.running_mean.data[ch] + layer.momentum * mean;
        layer.running_var.data[ch] =
            (T(1) - layer.momentum) * layer.running_var.data[ch] + layer.momentum * var;

        const T g = layer.gamma.data[ch];
        const T b = layer.beta.data[ch];
        for (std::int64_t i = 0; i < n; ++i) {
            const T* xp = x.data.data() + (i * c + ch) * plane;
            T* yp = y.data.data() + (i * c + ch) * plane;
            T* xh = cache ? cache->x_hat.data.data() + (i * c + ch) * plane : nullptr;
            for (std::int64_t j = 0; j < plane; ++j) {
                const T v = (xp[j] - mean) * inv;
                if (xh) xh[j] = v;
                yp[j] = g * v + b;
            }
        }
        if (cache) cache->inv_std[static_cast<std::size_t>(ch)] = inv;
    }
    return y;
}

// Train-mode backward through the batch statistics.
template <typename T>
std::tuple<Tensor<T>, Tensor<T>, Tensor<T>>
batchnorm2d_backward(const Tensor<T>& grad_y, const BatchNorm2dLayer<T>& layer,
                     const BatchNormCache<T>& cache) {
    const std::int64_t n = grad_y.shape[0], c = grad_y.shape[1];
    const std::int64_t plane = grad_y.shape[2] * grad_y.shape[3];
    const std::int64_t m = n * plane;

    Tensor<T> grad_x(grad_y.shape);
    Tensor<T> grad_gamma({c});
    Tensor<T> grad_beta({c});

    for (std::int64_t ch = 0; ch < c; ++ch) {
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (std::int64_t i = 0; i < n; ++i) {
            const T* gy = grad_y.data.data() + (i * c + ch) * plane;
            const T* xh = cache.x_hat.data.data() + (i * c + ch) * plane;
            for (std::int64_t j = 0; j < plane; ++j) {
                sum_dy += gy[j];
                sum_dy_xhat += gy[j] * xh[j];
            }
        }
        grad_beta.data[ch] = sum_dy;
        grad_gamma.data[ch] = sum_dy_xhat;

        const T scale = layer.gamma.data[ch] * cache.inv_std[static_cast<std::size_t>(ch)];
        const T mean_dy = sum_dy / static_cast<T>(m);
        const T mean_dy_xhat = sum_dy_xhat / static_cast<T>(m);
        for (std::int64_t i = 0; i < n; ++i) {
            const T* gy = grad_y.data.data() + (i * c + ch) * plane;
            const T* xh = cache.x_hat.data.data() + (i * c + ch) * plane;
            T* gx = grad_x.data.data() + (i * c + ch) * plane;
            for (std::int64_t j = 0; j < plane; ++j) {
                gx[j] = scale * (gy[j] - mean_dy - xh[j] * mean_dy_xhat);
            }
        }
    }
    return {std::move(grad_x), std::move(grad_gamma), std::move(grad_beta)};
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_y, const Tensor<T>& x) {
    Tensor<T> gx(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        gx.data[i] = x.data[i] > T(0) ? grad_y.data[i] : T(0);
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Global (adaptive) average pooling to 1x1
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> adaptive_avg_pool_forward(const Tensor<T>& x) {
    require_rank(x, 4, "adaptive_avg_pool input");
    const std::int64_t n = x.shape[0], c = x.shape[1];
    const std::int64_t plane = x.shape[2] * x.shape[3];
    Tensor<T> y({n, c, 1, 1});
    for (std::int64_t i = 0; i < n * c; ++i) {
        T acc = T(0);
        const T* xp = x.data.data() + i * plane;
        for (std::int64_t j = 0; j < plane; ++j) acc += xp[j];
        y.data[static_cast<std::size_t>(i)] = acc / static_cast<T>(plane);
    }
    return y;
}

template <typename T>
Tensor<T> adaptive_avg_pool_backward(const Tensor<T>& grad_y, std::int64_t h, std::int64_t w) {
    const std::int64_t n = grad_y.shape[0], c = grad_y.shape[1];
    const std::int64_t plane = h * w;
    Tensor<T> gx({n, c, h, w});
    for (std::int64_t i = 0; i < n * c; ++i) {
        const T v = grad_y.data[static_cast<std::size_t>(i)] / static_cast<T>(plane);
        T* gp = gx.data.data() + i * plane;
        for (std::int64_t j = 0; j < plane; ++j) gp[j] = v;
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Linear classifier: y = x W^T + b
// ---------------------------------------------------------------------------

template <typename T>
struct LinearLayer {
    Tensor<T> weight;   // (n_classes, C_feat)
    Tensor<T> bias;     // (n_classes)
};

template <typename T>
struct LinearCache {
    Tensor<T> x;
};

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const LinearLayer<T>& layer,
                         LinearCache<T>* cache = nullptr) {
    require_rank(x, 2, "linear input");
    const std::int64_t n = x.shape[0], cf = x.shape[1];
    const std::int64_t k = layer.weight.shape[0];
    if (cf != layer.weight.shape[1]) {
        throw ShapeMismatch("linear: input " + x.shape_str() + " does not match weight " +
                            layer.weight.shape_str());
    }
    Tensor<T> y({n, k});
    gemm_nt(x.data.data(), layer.weight.data.data(), y.data.data(), n, cf, k);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < k; ++j) y.at2(i, j) += layer.bias.data[static_cast<std::size_t>(j)];
    }
    if (cache) cache->x = x;
    return y;
}

template <typename T>
std::tuple<Tensor<T>, Tensor<T>, Tensor<T>>
linear_backward(const Tensor<T>& grad_y, const LinearLayer<T>& layer, const LinearCache<T>& cache) {
    const std::int64_t n = grad_y.shape[0], k = grad_y.shape[1];
    const std::int64_t cf = layer.weight.shape[1];
    Tensor<T> grad_x({n, cf});
    Tensor<T> grad_w(layer.weight.shape);
    Tensor<T> grad_b(layer.bias.shape);
    gemm(grad_y.data.data(), layer.weight.data.data(), grad_x.data.data(), n, k, cf);
    gemm_tn(grad_y.data.data(), cache.x.data.data(), grad_w.data.data(), n, k, cf);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < k; ++j) grad_b.data[static_cast<std::size_t>(j)] += grad_y.at2(i, j);
    }
    return {std::move(grad_x), std::move(grad_w), std::move(grad_b)};
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy, mean over the batch, max-subtracted for stability.
// Returns (loss, grad_logits) with grad = (softmax - onehot) / N.
// ---------------------------------------------------------------------------

template <typename T>
std::pair<double, Tensor<T>> softmax_cross_entropy(const Tensor<T>& logits,
                                                   const std::vector<int>& labels) {
    require_rank(logits, 2, "softmax_cross_entropy logits");
    const std::int64_t n = logits.shape[0], k = logits.shape[1];
    if (static_cast<std::int64_t>(labels.size()) != n) {
        throw ShapeMismatch("softmax_cross_entropy: label count does not match batch");
    }
    Tensor<T> grad({n, k});
    double loss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= k) {
            throw LabelOutOfRange("label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(k) + ")");
        }
        T mx = logits.at2(i, 0);
        for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, logits.at2(i, j));
        T denom = T(0);
        for (std::int64_t j = 0; j < k; ++j) denom += std::exp(logits.at2(i, j) - mx);
        const T log_denom = std::log(denom);
        loss -= static_cast<double>(logits.at2(i, label) - mx - log_denom);
        for (std::int64_t j = 0; j < k; ++j) {
            const T p = std::exp(logits.at2(i, j) - mx) / denom;
            grad.at2(i, j) = (p - (j == label ? T(1) : T(0))) / static_cast<T>(n);
        }
    }
    loss /= static_cast<double>(n);
    return {loss, std::move(grad)};
}

template <typename T>
std::vector<double> softmax_row(const Tensor<T>& logits, std::int64_t row) {
    const std::int64_t k = logits.shape[1];
    double mx = static_cast<double>(logits.at2(row, 0));
    for (std::int64_t j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(logits.at2(row, j)));
    std::vector<double> p(static_cast<std::size_t>(k));
    double denom = 0.0;
    for (std::int64_t j = 0; j < k; ++j) {
        p[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(logits.at2(row, j)) - mx);
        denom += p[static_cast<std::size_t>(j)];
    }
    for (auto& v : p) v /= denom;
    return p;
}

} // namespace acsense::nn
