#include "pqm/nf4.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pqm/error.hpp"

namespace pqm {

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw Error::validation("inverse_normal_cdf: p must be in (0,1)");
    if (p == 0.5) return 0.0;

    // Acklam's rational approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // two Halley steps against the exact CDF (erfc form)
    for (int i = 0; i < 2; ++i) {
        double e = 0.5 * std::erfc(-x / M_SQRT2) - p;
        double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

NormalFloatCodebook build_codebook(int k) {
    if (k < 2 || k > 8)
        throw Error::validation("build_codebook: k must be in [2,8], got " +
                                std::to_string(k));
    const int half = 1 << (k - 1);
    const double delta =
        0.5 * (1.0 / (1 << (k + 1)) + 1.0 / ((1 << (k + 1)) - 2));

    std::vector<double> raw;
    raw.reserve(1 << k);
    // negative side: `half` probabilities from delta to 0.5 inclusive,
    // the 0.5 point yielding the shared zero level
    for (int i = 0; i < half; ++i) {
        double p = delta + (0.5 - delta) * i / (half - 1);
        raw.push_back(inverse_normal_cdf(p));
    }
    // positive side: half + 1 probabilities from 0.5 to 1 - delta, skipping
    // the duplicate zero at 0.5
    for (int j = 1; j <= half; ++j) {
        double p = 0.5 + (0.5 - delta) * j / half;
        raw.push_back(inverse_normal_cdf(p));
    }

    double max_abs = 0.0;
    for (double v : raw) max_abs = std::max(max_abs, std::fabs(v));

    NormalFloatCodebook cb;
    cb.k = k;
    cb.levels.reserve(raw.size());
    for (double v : raw) cb.levels.push_back(static_cast<float>(v / max_abs));
    cb.levels.front() = -1.0f;
    cb.levels.back() = 1.0f;
    cb.zero_code = half - 1;
    cb.levels[cb.zero_code] = 0.0f;
    return cb;
}

int nearest_code(float x, const NormalFloatCodebook& cb) {
    int best = 0;
    float best_dist = std::fabs(x - cb.levels[0]);
    const int n = cb.num_levels();
    for (int c = 1; c < n; ++c) {
        float dist = std::fabs(x - cb.levels[c]);
        if (dist < best_dist) {  // ties keep the lower code
            best_dist = dist;
            best = c;
        }
    }
    return best;
}

std::pair<std::vector<uint8_t>, float> quantise_block(std::span<const float> values,
                                                      const NormalFloatCodebook& cb) {
    if (values.empty()) throw Error::validation("quantise_block: empty block");
    float scale = 0.0f;
    for (float v : values) {
        if (!std::isfinite(v)) throw Error::validation("quantise_block: non-finite value");
        scale = std::max(scale, std::fabs(v));
    }
    std::vector<uint8_t> codes(values.size());
    if (scale == 0.0f) {
        std::fill(codes.begin(), codes.end(), static_cast<uint8_t>(cb.zero_code));
        return {std::move(codes), 0.0f};
    }
    for (size_t i = 0; i < values.size(); ++i)
        codes[i] = static_cast<uint8_t>(nearest_code(values[i] / scale, cb));
    return {std::move(codes), scale};
}

QuantisedMatrix quantise_matrix(const Matrix& m, int block_size,
                                const NormalFloatCodebook& cb) {
    if (block_size < 1) throw Error::validation("quantise_matrix: block_size must be >= 1");
    const size_t total = m.size();
    QuantisedMatrix q;
    q.rows = m.rows;
    q.cols = m.cols;
    q.k = cb.k;
    q.block_size = block_size;

    std::vector<uint8_t> all_codes;
    all_codes.reserve(total);
    for (size_t start = 0; start < total; start += block_size) {
        const size_t len = std::min<size_t>(block_size, total - start);
        auto [codes, s] = quantise_block({m.data.data() + start, len}, cb);
        all_codes.insert(all_codes.end(), codes.begin(), codes.end());
        q.scales.push_back(s);
    }
    q.codes = pack_codes(all_codes, cb.k);
    return q;
}

Matrix dequantise(const QuantisedMatrix& q, const NormalFloatCodebook& cb) {
    if (q.k != cb.k) throw Error::corrupt("dequantise: codebook bit width mismatch");
    const size_t total = q.num_elements();
    const size_t want_blocks = (total + q.block_size - 1) / q.block_size;
    if (q.scales.size() != want_blocks)
        throw Error::corrupt("dequantise: scale count inconsistent with shape");
    auto codes = unpack_codes(q.codes, q.k, total);
    Matrix m(q.rows, q.cols);
    for (size_t i = 0; i < total; ++i) {
        if (codes[i] >= cb.levels.size())
            throw Error::corrupt("dequantise: code out of range");
        m.data[i] = cb.levels[codes[i]] * q.scales[i / q.block_size];
    }
    return m;
}

bool operator==(const QuantisedMatrix& a, const QuantisedMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.k == b.k &&
           a.block_size == b.block_size && a.codes == b.codes && a.scales == b.scales;
}

std::vector<uint8_t> pack_codes(std::span<const uint8_t> codes, int k) {
    if (k < 1 || k > 8) throw Error::validation("pack_codes: k must be in [1,8]");
    const size_t nbits = codes.size() * k;
    std::vector<uint8_t> bytes((nbits + 7) / 8, 0);
    size_t bit = 0;
    for (uint8_t code : codes) {
        if (code >= (1u << k)) throw Error::validation("pack_codes: code out of range");
        for (int b = 0; b < k; ++b, ++bit) {
            if (code & (1u << b)) bytes[bit / 8] |= static_cast<uint8_t>(1u << (bit % 8));
        }
    }
    return bytes;
}

std::vector<uint8_t> unpack_codes(std::span<const uint8_t> bytes, int k, size_t count) {
    if (k < 1 || k > 8) throw Error::validation("unpack_codes: k must be in [1,8]");
    const size_t want = (count * k + 7) / 8;
    if (bytes.size() != want)
        throw Error::validation("unpack_codes: byte length inconsistent with count");
    std::vector<uint8_t> codes(count, 0);
    size_t bit = 0;
    for (size_t i = 0; i < count; ++i) {
        uint8_t code = 0;
        for (int b = 0; b < k; ++b, ++bit) {
            if (bytes[bit / 8] & (1u << (bit % 8))) code |= static_cast<uint8_t>(1u << b);
        }
        codes[i] = code;
    }
    // pad bits must be zero
    for (; bit < bytes.size() * 8; ++bit)
        if (bytes[bit / 8] & (1u << (bit % 8)))
            throw Error::corrupt("unpack_codes: nonzero pad bits");
    return codes;
}

QuantStats compression_stats(uint64_t raw_elements, const QuantisedMatrix& q,
                             uint64_t unquantised_bytes) {
    if (raw_elements != q.num_elements())
        throw Error::validation("compression_stats: element count mismatch");
    QuantStats s;
    s.raw_bytes = 4 * raw_elements + unquantised_bytes;
    s.quantised_bytes = (static_cast<uint64_t>(q.k) * raw_elements + 7) / 8 +
                        4 * q.num_blocks() + unquantised_bytes;
    s.ratio = static_cast<double>(s.raw_bytes) / static_cast<double>(s.quantised_bytes);
    return s;
}

QuantStats combine_stats(const std::vector<QuantStats>& parts, uint64_t header_bytes) {
    QuantStats s;
    s.raw_bytes = header_bytes;
    s.quantised_bytes = header_bytes;
    for (const auto& p : parts) {
        s.raw_bytes += p.raw_bytes;
        s.quantised_bytes += p.quantised_bytes;
    }
    s.ratio = static_cast<double>(s.raw_bytes) / static_cast<double>(s.quantised_bytes);
    return s;
}

}  // namespace pqm
