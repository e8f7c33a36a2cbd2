#pragma once

#include <cstdint>
#include <vector>

#include "pqm/rng.hpp"

namespace pqm {

/// Dense row-major FP32 matrix. Dot products accumulate in FP64.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;  // length rows * cols

    Matrix() = default;
    Matrix(int rows, int cols);

    static Matrix identity(int n);

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    /// Throws if any element is NaN or Inf.
    void check_finite(const char* what) const;
};

bool operator==(const Matrix& a, const Matrix& b);

/// Standard matrix product with a fixed i-k-j loop order and FP64
/// accumulation, so the summation order never varies between runs.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, float s);

/// Overwrites every element with an i.i.d. N(mean, std^2) draw from rng.
void gaussian_fill(Matrix& m, float mean, float std, Rng& rng);

}  // namespace pqm
