#include "pqm/lora.hpp"

#include <cmath>
#include <string>

#include "pqm/error.hpp"

namespace pqm {

LoraAdapter init_adapter(int d, int k_dim, int r, float alpha, Rng& rng) {
    if (r < 1) throw Error::validation("init_adapter: rank must be >= 1");
    if (2 * r > std::min(d, k_dim))
        throw Error::validation("init_adapter: rank " + std::to_string(r) +
                                " too large for " + std::to_string(d) + "x" +
                                std::to_string(k_dim));
    if (alpha <= 0.0f) throw Error::validation("init_adapter: alpha must be > 0");
    LoraAdapter ad;
    ad.rank = r;
    ad.alpha = alpha;
    ad.a = Matrix(r, k_dim);
    gaussian_fill(ad.a, 0.0f, std::sqrt(1.0f / static_cast<float>(r)), rng);
    ad.b = Matrix(d, r);  // zeros: dW = 0 at init
    return ad;
}

static void check_shapes(const Matrix& w0, const LoraAdapter& ad) {
    if (ad.b.rows != w0.rows || ad.a.cols != w0.cols || ad.b.cols != ad.rank ||
        ad.a.rows != ad.rank)
        throw Error::validation("lora: adapter dims do not match base weight");
}

Matrix lora_forward(const Matrix& w0_deq, const LoraAdapter& ad, const Matrix& x) {
    check_shapes(w0_deq, ad);
    Matrix y = matmul(w0_deq, x);
    Matrix delta = matmul(ad.b, matmul(ad.a, x));
    const float s = ad.multiplier();
    for (size_t i = 0; i < y.size(); ++i) y.data[i] += s * delta.data[i];
    return y;
}

Matrix merge(const Matrix& w0_deq, const LoraAdapter& ad) {
    check_shapes(w0_deq, ad);
    return add(w0_deq, scale(matmul(ad.b, ad.a), ad.multiplier()));
}

LoraGrads lora_backward(const Matrix& w0_deq, const LoraAdapter& ad, const Matrix& x,
                        const Matrix& gy) {
    check_shapes(w0_deq, ad);
    if (gy.rows != w0_deq.rows || gy.cols != x.cols || x.rows != w0_deq.cols)
        throw Error::validation("lora_backward: gradient shape mismatch");
    const float s = ad.multiplier();
    Matrix ax = matmul(ad.a, x);            // r x n
    Matrix bt_gy = matmul(transpose(ad.b), gy);  // r x n
    LoraGrads g;
    g.gb = scale(matmul(gy, transpose(ax)), s);
    g.ga = scale(matmul(bt_gy, transpose(x)), s);
    g.gx = add(matmul(transpose(w0_deq), gy),
               scale(matmul(transpose(ad.a), bt_gy), s));
    return g;
}

uint64_t param_count(int l_lora, int d_model, int r) {
    if (l_lora <= 0 || d_model <= 0 || r <= 0)
        throw Error::validation("param_count: arguments must be positive");
    return 2ULL * l_lora * d_model * r;
}

}  // namespace pqm
