#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "topk/errors.hpp"

namespace topk {

/// Dense row-major buffer with a shape tag. This is deliberately minimal:
/// the kernels operate on raw pointers, Tensor only owns storage and shape.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0);
    }

    Tensor(std::initializer_list<std::size_t> s)
        : Tensor(std::vector<std::size_t>(s)) {}

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    std::size_t numel() const { return data.size(); }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    double* ptr() { return data.data(); }
    const double* ptr() const { return data.data(); }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw NumericError("non-finite values in " + what);
}

}  // namespace topk
