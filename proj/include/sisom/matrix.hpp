#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sisom/errors.hpp"

namespace sisom {

// Dense row-major matrix of doubles. Just enough linear algebra for the
// classifier; nothing here is performance critical at the sizes we run.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) {
        return {data.data() + r * cols, cols};
    }

    bool all_finite() const {
        for (const double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix&) const = default;
};

// y = M x
inline std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (x.size() != m.cols) throw ConfigError("matvec: dimension mismatch");
    std::vector<double> y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        const double* w = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) acc += w[c] * x[c];
        y[r] = acc;
    }
    return y;
}

// y = M^T x
inline std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x) {
    if (x.size() != m.rows) throw ConfigError("matvec_transposed: dimension mismatch");
    std::vector<double> y(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double xi = x[r];
        const double* w = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += w[c] * xi;
    }
    return y;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

} // namespace sisom
