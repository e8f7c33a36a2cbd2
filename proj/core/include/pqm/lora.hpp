#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pqm/matrix.hpp"

namespace pqm {

/// Low-rank update dW = (alpha/r) * b * a over a frozen base weight.
/// b starts at zero, so a freshly initialised adapter is a no-op.
struct LoraAdapter {
    Matrix a;     // r x k_dim, N(0, 1/r) init
    Matrix b;     // d x r, zero init
    int rank = 0;
    float alpha = 0.0f;

    float multiplier() const { return alpha / static_cast<float>(rank); }
};

struct LoraGrads {
    Matrix ga;
    Matrix gb;
    Matrix gx;
};

LoraAdapter init_adapter(int d, int k_dim, int r, float alpha, Rng& rng);

/// y = w0 * x + (alpha/r) * b * (a * x). The low-rank path stays in full
/// precision; w0 is the dequantised base when the layer is quantised.
Matrix lora_forward(const Matrix& w0_deq, const LoraAdapter& ad, const Matrix& x);

/// w0 + (alpha/r) * b * a
Matrix merge(const Matrix& w0_deq, const LoraAdapter& ad);

/// Gradients of the lora_forward output under upstream gradient gy. The
/// base weight is frozen and receives no gradient.
LoraGrads lora_backward(const Matrix& w0_deq, const LoraAdapter& ad, const Matrix& x,
                        const Matrix& gy);

/// Adapter parameter count for l_lora square d_model attach points:
/// 2 * l_lora * d_model * r.
uint64_t param_count(int l_lora, int d_model, int r);

/// One set of adapters per speaker, keyed by layer id.
struct AdapterSet {
    std::string speaker_id;
    std::map<std::string, LoraAdapter> adapters;
};

}  // namespace pqm
