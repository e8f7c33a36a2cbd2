#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pqm/matrix.hpp"

namespace pqm {

/// k-bit NormalFloat codebook: 2^k quantisation levels in [-1, 1] derived
/// from standard-normal quantiles, with an exact zero level. Construction
/// is deterministic; the same k always yields the same levels.
struct NormalFloatCodebook {
    int k = 0;
    std::vector<float> levels;  // strictly ascending, levels[0] = -1, back() = +1
    int zero_code = 0;          // levels[zero_code] == 0.0f exactly

    int num_levels() const { return 1 << k; }
};

/// Builds the k-bit codebook (2 <= k <= 8). Levels are inverse normal CDF
/// values at evenly spaced probabilities with tail offset
/// delta = 0.5 * (1/2^(k+1) + 1/(2^(k+1)-2)): 2^(k-1) points from delta to
/// 0.5 on the negative side, 2^(k-1)+1 points from 0.5 to 1-delta on the
/// positive side, duplicate zero removed, then divided by the largest
/// magnitude so the endpoints are exactly -1 and +1.
NormalFloatCodebook build_codebook(int k);

/// Inverse standard normal CDF, accurate to ~1e-15 (rational initial
/// estimate refined by Halley steps on erfc). Exposed for reuse by the
/// occupancy statistics; tests check it against an independent bisection.
double inverse_normal_cdf(double p);

/// One weight matrix in packed k-bit form: flattened row-major elements in
/// consecutive blocks, one FP32 absmax scale per block.
struct QuantisedMatrix {
    int rows = 0;
    int cols = 0;
    int k = 0;
    int block_size = 0;
    std::vector<uint8_t> codes;   // packed, ceil(rows*cols*k/8) bytes
    std::vector<float> scales;    // ceil(rows*cols/block_size) entries

    size_t num_elements() const { return static_cast<size_t>(rows) * cols; }
    size_t num_blocks() const { return scales.size(); }
};

bool operator==(const QuantisedMatrix& a, const QuantisedMatrix& b);

/// Code of the level nearest to a normalised value, ties toward the
/// lower code index.
int nearest_code(float normalised, const NormalFloatCodebook& cb);

/// Quantises one block: scale = max |v|; each v/scale maps to the nearest
/// level, ties toward the lower code. An all-zero block gets scale 0 and
/// every code equal to zero_code. Returns unpacked codes.
std::pair<std::vector<uint8_t>, float> quantise_block(std::span<const float> values,
                                                      const NormalFloatCodebook& cb);

QuantisedMatrix quantise_matrix(const Matrix& m, int block_size,
                                const NormalFloatCodebook& cb);

Matrix dequantise(const QuantisedMatrix& q, const NormalFloatCodebook& cb);

/// Packs codes (each < 2^k) into an LSB-first little-endian bit stream.
/// For k=4 this puts the earlier element in the low nibble. Trailing pad
/// bits in the last byte are zero.
std::vector<uint8_t> pack_codes(std::span<const uint8_t> codes, int k);

std::vector<uint8_t> unpack_codes(std::span<const uint8_t> bytes, int k, size_t count);

struct QuantStats {
    uint64_t raw_bytes = 0;
    uint64_t quantised_bytes = 0;
    double ratio = 1.0;
};

/// Byte accounting for compression ratios. raw_elements are counted at 4
/// bytes each; unquantised_bytes (biases, unselected layers) appear on
/// both sides. Per-matrix packing overhead is codes + one f32 scale per
/// block; container headers are accounted by the checkpoint writer.
QuantStats compression_stats(uint64_t raw_elements, const QuantisedMatrix& q,
                             uint64_t unquantised_bytes);

/// Merges per-matrix stats into a whole-model figure.
QuantStats combine_stats(const std::vector<QuantStats>& parts, uint64_t header_bytes);

}  // namespace pqm
