#include <doctest.h>

#include <cmath>
#include <vector>

#include "pqm/error.hpp"
#include "pqm/lora.hpp"

using namespace pqm;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, float std = 1.0f) {
    Matrix m(r, c);
    gaussian_fill(m, 0.0f, std, rng);
    return m;
}

// straight-line FP64 reimplementation of the adapter forward path, used
// as the finite-difference engine
double fp64_loss(const Matrix& w0, const Matrix& a, const Matrix& b, float alpha,
                 int rank, const Matrix& x, const Matrix& sens) {
    const int d = w0.rows, kd = w0.cols, n = x.cols, r = rank;
    const double s = static_cast<double>(alpha) / r;
    std::vector<double> ax(static_cast<size_t>(r) * n, 0.0);
    for (int i = 0; i < r; ++i)
        for (int k = 0; k < kd; ++k)
            for (int j = 0; j < n; ++j)
                ax[i * n + j] += static_cast<double>(a.at(i, k)) * x.at(k, j);
    double loss = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < n; ++j) {
            double y = 0.0;
            for (int k = 0; k < kd; ++k)
                y += static_cast<double>(w0.at(i, k)) * x.at(k, j);
            for (int q = 0; q < r; ++q)
                y += s * static_cast<double>(b.at(i, q)) * ax[q * n + j];
            loss += y * sens.at(i, j);
        }
    return loss;
}

}  // namespace

TEST_CASE("fresh adapter is a no-op") {
    Rng rng(1);
    auto ad = init_adapter(8, 8, 2, 2.0f, rng);
    Matrix w0 = random_matrix(8, 8, rng);
    Matrix x = random_matrix(8, 3, rng);
    CHECK(merge(w0, ad) == w0);
    CHECK(lora_forward(w0, ad, x) == matmul(w0, x));
}

TEST_CASE("init shapes and determinism") {
    Rng r1(7), r2(7);
    auto a1 = init_adapter(4, 4, 2, 2.0f, r1);
    auto a2 = init_adapter(4, 4, 2, 2.0f, r2);
    CHECK(a1.a.rows == 2);
    CHECK(a1.a.cols == 4);
    CHECK(a1.b.rows == 4);
    CHECK(a1.b.cols == 2);
    CHECK(a1.a == a2.a);
    for (float v : a1.b.data) CHECK(v == 0.0f);
}

TEST_CASE("init rejects oversized rank") {
    Rng rng(1);
    CHECK_THROWS_AS(init_adapter(8, 8, 5, 5.0f, rng), Error);
    CHECK_THROWS_AS(init_adapter(8, 8, 0, 1.0f, rng), Error);
}

TEST_CASE("unit-structure forward") {
    // w0 = 0, b = leading identity columns, a = leading identity rows,
    // alpha = r: output embeds x's first r coordinates
    const int d = 4, r = 2;
    Matrix w0(d, d);
    LoraAdapter ad;
    ad.rank = r;
    ad.alpha = static_cast<float>(r);
    ad.b = Matrix(d, r);
    ad.a = Matrix(r, d);
    for (int i = 0; i < r; ++i) {
        ad.b.at(i, i) = 1.0f;
        ad.a.at(i, i) = 1.0f;
    }
    Rng rng(3);
    Matrix x = random_matrix(d, 5, rng);
    Matrix y = lora_forward(w0, ad, x);
    for (int j = 0; j < 5; ++j) {
        for (int i = 0; i < r; ++i) CHECK(y.at(i, j) == x.at(i, j));
        for (int i = r; i < d; ++i) CHECK(y.at(i, j) == 0.0f);
    }
}

TEST_CASE("merge hand case") {
    Matrix w0(2, 2);
    LoraAdapter ad;
    ad.rank = 1;
    ad.alpha = 1.0f;
    ad.b = Matrix(2, 1);
    ad.b.at(0, 0) = 1.0f;
    ad.a = Matrix(1, 2);
    ad.a.at(0, 0) = 1.0f;
    Matrix m = merge(w0, ad);
    CHECK(m.at(0, 0) == 1.0f);
    CHECK(m.at(0, 1) == 0.0f);
    CHECK(m.at(1, 0) == 0.0f);
    CHECK(m.at(1, 1) == 0.0f);
}

TEST_CASE("forward equals merge-then-multiply") {
    Rng rng(17);
    Matrix w0 = random_matrix(8, 8, rng);
    auto ad = init_adapter(8, 8, 2, 2.0f, rng);
    gaussian_fill(ad.b, 0.0f, 0.5f, rng);
    Matrix merged = merge(w0, ad);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix x = random_matrix(8, 4, rng);
        Matrix via_forward = lora_forward(w0, ad, x);
        Matrix via_merge = matmul(merged, x);
        for (size_t i = 0; i < via_forward.size(); ++i)
            CHECK(via_forward.data[i] ==
                  doctest::Approx(via_merge.data[i]).epsilon(1e-5));
    }
}

TEST_CASE("backward zero upstream and zero-b cases") {
    Rng rng(5);
    Matrix w0 = random_matrix(6, 4, rng);
    auto ad = init_adapter(6, 4, 2, 2.0f, rng);
    Matrix x = random_matrix(4, 3, rng);
    Matrix gy0(6, 3);
    auto g = lora_backward(w0, ad, x, gy0);
    for (float v : g.ga.data) CHECK(v == 0.0f);
    for (float v : g.gb.data) CHECK(v == 0.0f);
    for (float v : g.gx.data) CHECK(v == 0.0f);

    // b = 0 at init, so A receives no gradient yet
    Matrix gy = random_matrix(6, 3, rng);
    auto g2 = lora_backward(w0, ad, x, gy);
    for (float v : g2.ga.data) CHECK(v == 0.0f);
    bool any = false;
    for (float v : g2.gb.data) any = any || v != 0.0f;
    CHECK(any);
}

TEST_CASE("gradients match FP64 central differences on many shapes") {
    Rng rng(2025);
    struct Shape {
        int d, kd, r;
    };
    std::vector<Shape> shapes{{4, 4, 1}, {8, 4, 2}, {4, 10, 2}, {12, 6, 3},
                              {6, 12, 1}, {16, 16, 4}};
    int tested = 0;
    for (const auto& sh : shapes) {
        for (int rep = 0; rep < 4; ++rep, ++tested) {
            Matrix w0 = random_matrix(sh.d, sh.kd, rng, 0.5f);
            auto ad = init_adapter(sh.d, sh.kd, sh.r, static_cast<float>(sh.r), rng);
            gaussian_fill(ad.b, 0.0f, 0.5f, rng);
            Matrix x = random_matrix(sh.kd, 3, rng);
            Matrix sens = random_matrix(sh.d, 3, rng);

            auto g = lora_backward(w0, ad, x, sens);
            const double h = 1e-4;
            auto check_param = [&](Matrix& param, const Matrix& grad) {
                for (size_t i = 0; i < param.size(); ++i) {
                    const float orig = param.data[i];
                    // perturbed values round in FP32, so divide by the step
                    // actually taken rather than the nominal 2h
                    const float up_v = orig + static_cast<float>(h);
                    const float dn_v = orig - static_cast<float>(h);
                    param.data[i] = up_v;
                    double up = fp64_loss(w0, ad.a, ad.b, ad.alpha, ad.rank, x, sens);
                    param.data[i] = dn_v;
                    double dn = fp64_loss(w0, ad.a, ad.b, ad.alpha, ad.rank, x, sens);
                    param.data[i] = orig;
                    const double fd = (up - dn) / (static_cast<double>(up_v) - dn_v);
                    const double denom = std::max(1.0, std::fabs(fd));
                    CHECK(std::fabs(grad.data[i] - fd) / denom < 1e-4);
                }
            };
            check_param(ad.a, g.ga);
            check_param(ad.b, g.gb);
        }
    }
    CHECK(tested >= 20);
}

TEST_CASE("param_count formula") {
    CHECK(param_count(24, 512, 4) == 98304);
    CHECK(param_count(24, 512, 4) == 4 * param_count(24, 512, 1));
    CHECK(param_count(1, 1, 1) == 2);
    CHECK_THROWS_AS(param_count(0, 1, 1), Error);
}

TEST_CASE("shape mismatches rejected") {
    Rng rng(9);
    Matrix w0 = random_matrix(6, 4, rng);
    auto ad = init_adapter(6, 4, 2, 2.0f, rng);
    Matrix bad_x = random_matrix(6, 3, rng);
    CHECK_THROWS_AS(lora_forward(w0, ad, bad_x), Error);
    Matrix w_bad = random_matrix(5, 4, rng);
    CHECK_THROWS_AS(merge(w_bad, ad), Error);
}
