#include "pqm/matrix.hpp"

#include <cmath>
#include <string>

#include "pqm/error.hpp"

namespace pqm {

Matrix::Matrix(int r, int c) {
    if (r <= 0 || c <= 0)
        throw Error::validation("Matrix: dimensions must be positive, got " +
                                std::to_string(r) + "x" + std::to_string(c));
    rows = r;
    cols = c;
    data.assign(static_cast<size_t>(r) * c, 0.0f);
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0f;
    return m;
}

void Matrix::check_finite(const char* what) const {
    for (float v : data)
        if (!std::isfinite(v))
            throw Error::validation(std::string(what) + ": non-finite element");
}

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw Error::validation("matmul: inner dimensions " + std::to_string(a.cols) +
                                " and " + std::to_string(b.rows) + " differ");
    Matrix c(a.rows, b.cols);
    std::vector<double> acc(static_cast<size_t>(b.cols));
    for (int i = 0; i < a.rows; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const float* arow = &a.data[static_cast<size_t>(i) * a.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const float* brow = &b.data[static_cast<size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) acc[j] += aik * brow[j];
        }
        float* crow = &c.data[static_cast<size_t>(i) * c.cols];
        for (int j = 0; j < b.cols; ++j) crow[j] = static_cast<float>(acc[j]);
    }
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw Error::validation("add: shape mismatch");
    Matrix c(a.rows, a.cols);
    for (size_t i = 0; i < a.size(); ++i) c.data[i] = a.data[i] + b.data[i];
    return c;
}

Matrix scale(const Matrix& m, float s) {
    Matrix c(m.rows, m.cols);
    for (size_t i = 0; i < m.size(); ++i) c.data[i] = m.data[i] * s;
    return c;
}

void gaussian_fill(Matrix& m, float mean, float std, Rng& rng) {
    if (std < 0.0f) throw Error::validation("gaussian_fill: std must be >= 0");
    for (float& v : m.data) v = static_cast<float>(rng.normal(mean, std));
}

}  // namespace pqm
