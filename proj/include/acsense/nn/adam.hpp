#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "acsense/nn/tensor.hpp"

namespace acsense::nn {

// Bias-corrected Adam. Moments are aligned index-for-index with the
// parameter list handed to adam_step; the step counter is shared.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::int64_t t = 0;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);

    template <typename P>
    static AdamState init_like(const std::vector<P>& params) {
        AdamState st;
        st.m.reserve(params.size());
        st.v.reserve(params.size());
        for (const auto& p : params) {
            st.m.emplace_back(p->shape);
            st.v.emplace_back(p->shape);
        }
        return st;
    }
};

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& st, T lr) {
    if (params.size() != grads.size() || params.size() != st.m.size()) {
        throw ShapeMismatch("adam_step: parameter/gradient/state counts differ");
    }
    st.t += 1;
    const T bc1 = T(1) - std::pow(st.beta1, static_cast<T>(st.t));
    const T bc2 = T(1) - std::pow(st.beta2, static_cast<T>(st.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& p = *params[i];
        const Tensor<T>& g = *grads[i];
        Tensor<T>& m = st.m[i];
        Tensor<T>& v = st.v[i];
        if (p.numel() != g.numel()) {
            throw ShapeMismatch("adam_step: gradient shape does not match parameter");
        }
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            m.data[j] = st.beta1 * m.data[j] + (T(1) - st.beta1) * g.data[j];
            v.data[j] = st.beta2 * v.data[j] + (T(1) - st.beta2) * g.data[j] * g.data[j];
            const T m_hat = m.data[j] / bc1;
            const T v_hat = v.data[j] / bc2;
            p.data[j] -= lr * m_hat / (std::sqrt(v_hat) + st.eps);
        }
    }
}

} // namespace acsense::nn
