#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "acsense/errors.hpp"

namespace acsense::nn {

// Dense row-major tensor with up to 4 axes, NCHW convention.
template <typename T>
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
        std::int64_t n = 1;
        for (auto d : shape) n *= d;
        data.assign(static_cast<std::size_t>(n), T(0));
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    std::int64_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    T& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
        return data[static_cast<std::size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    const T& at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data[static_cast<std::size_t>(((n * shape[1] + c) * shape[2] + h) * shape[3] + w)];
    }
    T& at2(std::int64_t n, std::int64_t k) {
        return data[static_cast<std::size_t>(n * shape[1] + k)];
    }
    const T& at2(std::int64_t n, std::int64_t k) const {
        return data[static_cast<std::size_t>(n * shape[1] + k)];
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "(";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << ")";
        return os.str();
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
void require_rank(const Tensor<T>& t, int rank, const char* what) {
    if (t.rank() != rank) {
        throw ShapeMismatch(std::string(what) + ": expected rank " + std::to_string(rank) +
                            ", got " + t.shape_str());
    }
}

} // namespace acsense::nn
