#include <doctest.h>

#include <cmath>

#include "pqm/error.hpp"
#include "pqm/matrix.hpp"

using namespace pqm;

namespace {

// independent naive triple-loop product in FP64
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double acc = 0.0;
            for (int k = 0; k < a.cols; ++k)
                acc += static_cast<double>(a.at(i, k)) * b.at(k, j);
            c.at(i, j) = static_cast<float>(acc);
        }
    return c;
}

Matrix random_matrix(int r, int c, Rng& rng) {
    Matrix m(r, c);
    gaussian_fill(m, 0.0f, 1.0f, rng);
    return m;
}

}  // namespace

TEST_CASE("matmul identity") {
    Rng rng(7);
    Matrix m = random_matrix(2, 2, rng);
    Matrix prod = matmul(Matrix::identity(2), m);
    CHECK(prod == m);
}

TEST_CASE("matmul hand arithmetic") {
    Matrix a(2, 2);
    a.data = {1, 2, 3, 4};
    Matrix b(2, 1);
    b.data = {0, 1};
    Matrix c = matmul(a, b);
    CHECK(c.at(0, 0) == 2.0f);
    CHECK(c.at(1, 0) == 4.0f);
}

TEST_CASE("matmul matches naive oracle") {
    Rng rng(42);
    Matrix a = random_matrix(7, 5, rng);
    Matrix b = random_matrix(5, 3, rng);
    Matrix got = matmul(a, b);
    Matrix want = naive_matmul(a, b);
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-6));
}

TEST_CASE("matmul rejects dimension mismatch") {
    Matrix a(2, 3), b(2, 3);
    CHECK_THROWS_AS(matmul(a, b), Error);
}

TEST_CASE("matmul associativity with identity is exact") {
    Rng rng(3);
    Matrix m = random_matrix(6, 6, rng);
    Matrix v = random_matrix(6, 1, rng);
    Matrix left = matmul(matmul(m, Matrix::identity(6)), v);
    Matrix right = matmul(m, v);
    CHECK(left == right);
}

TEST_CASE("gaussian_fill std=0 gives mean") {
    Rng rng(1);
    Matrix m(4, 4);
    gaussian_fill(m, 2.5f, 0.0f, rng);
    for (float v : m.data) CHECK(v == 2.5f);
}

TEST_CASE("gaussian_fill deterministic per seed") {
    Matrix a(8, 8), b(8, 8);
    Rng r1(99), r2(99);
    gaussian_fill(a, 0.0f, 1.0f, r1);
    gaussian_fill(b, 0.0f, 1.0f, r2);
    CHECK(a == b);
}

TEST_CASE("gaussian_fill rejects negative std") {
    Rng rng(1);
    Matrix m(2, 2);
    CHECK_THROWS_AS(gaussian_fill(m, 0.0f, -1.0f, rng), Error);
}

TEST_CASE("gaussian_fill sample statistics") {
    // law of large numbers bound, ~3 standard errors on 1e5 samples
    Rng rng(2024);
    Matrix m(100, 1000);
    gaussian_fill(m, 0.0f, 1.0f, rng);
    double sum = 0.0, sum_sq = 0.0;
    for (float v : m.data) {
        sum += v;
        sum_sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(m.size());
    const double mean = sum / n;
    const double std = std::sqrt(sum_sq / n - mean * mean);
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(std - 1.0) < 0.02);
}

TEST_CASE("rng streams are reproducible and fork-independent") {
    Rng a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng base(5);
    Rng f1 = base.fork(1), f2 = base.fork(2);
    CHECK(f1.next_u64() != f2.next_u64());
}
