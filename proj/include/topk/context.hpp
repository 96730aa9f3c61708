#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "topk/errors.hpp"

namespace topk {

// The n per-arm feature vectors observed at one round.
struct ContextMatrix {
    std::size_t arms = 0;         // n
    std::size_t dim = 0;          // d
    std::size_t round_index = 0;  // t, 1-based
    std::vector<double> data;     // arms x dim, row-major

    ContextMatrix() = default;
    ContextMatrix(std::size_t n, std::size_t d, std::size_t t)
        : arms(n), dim(d), round_index(t), data(n * d, 0.0) {}

    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    double* row_ptr(std::size_t i) { return data.data() + i * dim; }

    void validate() const {
        if (arms < 1 || dim < 1)
            throw InvalidConfigError("context matrix needs n >= 1 and d >= 1");
        for (double v : data)
            if (!std::isfinite(v))
                throw NumericError("non-finite context entry at round " +
                                   std::to_string(round_index));
    }
};

}  // namespace topk
