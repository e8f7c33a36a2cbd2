#include <doctest.h>

#include <cmath>
#include <vector>

#include "pqm/error.hpp"
#include "pqm/nf4.hpp"

using namespace pqm;

namespace {

// Independent inverse normal CDF oracle: bisection on erf. Deliberately
// shares no code with the implementation's rational approximation.
double oracle_inv_cdf(double p) {
    auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
    double lo = -12.0, hi = 12.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> oracle_levels(int k) {
    const int half = 1 << (k - 1);
    const double delta = 0.5 * (1.0 / (1 << (k + 1)) + 1.0 / ((1 << (k + 1)) - 2));
    std::vector<double> raw;
    for (int i = 0; i < half; ++i)
        raw.push_back(oracle_inv_cdf(delta + (0.5 - delta) * i / (half - 1)));
    for (int j = 1; j <= half; ++j)
        raw.push_back(oracle_inv_cdf(0.5 + (0.5 - delta) * j / half));
    double max_abs = 0.0;
    for (double v : raw) max_abs = std::max(max_abs, std::fabs(v));
    for (double& v : raw) v /= max_abs;
    return raw;
}

// exhaustive nearest-level search, ties toward the lower code
int oracle_nearest(float x, const NormalFloatCodebook& cb) {
    int best = 0;
    double best_dist = std::fabs(static_cast<double>(x) - cb.levels[0]);
    for (int c = 1; c < cb.num_levels(); ++c) {
        double dist = std::fabs(static_cast<double>(x) - cb.levels[c]);
        if (dist < best_dist) {
            best_dist = dist;
            best = c;
        }
    }
    return best;
}

double widest_gap(const NormalFloatCodebook& cb) {
    double g = 0.0;
    for (size_t i = 1; i < cb.levels.size(); ++i)
        g = std::max(g, static_cast<double>(cb.levels[i]) - cb.levels[i - 1]);
    return g;
}

}  // namespace

TEST_CASE("codebook k=4 structure") {
    auto cb = build_codebook(4);
    REQUIRE(cb.levels.size() == 16);
    CHECK(cb.levels.front() == -1.0f);
    CHECK(cb.levels.back() == 1.0f);
    CHECK(cb.levels[cb.zero_code] == 0.0f);
    for (size_t i = 1; i < cb.levels.size(); ++i)
        CHECK(cb.levels[i] > cb.levels[i - 1]);
}

TEST_CASE("codebook matches independent inverse-CDF oracle") {
    for (int k : {2, 3, 4, 5, 8}) {
        auto cb = build_codebook(k);
        auto want = oracle_levels(k);
        REQUIRE(cb.levels.size() == want.size());
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(std::fabs(cb.levels[i] - want[i]) < 1e-6);
    }
}

TEST_CASE("codebook is deterministic and validates k") {
    auto a = build_codebook(4);
    auto b = build_codebook(4);
    CHECK(a.levels == b.levels);
    CHECK_THROWS_AS(build_codebook(1), Error);
    CHECK_THROWS_AS(build_codebook(9), Error);
}

TEST_CASE("quantise_block zero block") {
    auto cb = build_codebook(4);
    std::vector<float> zeros(64, 0.0f);
    auto [codes, scale] = quantise_block(zeros, cb);
    CHECK(scale == 0.0f);
    for (auto c : codes) CHECK(c == cb.zero_code);
}

TEST_CASE("quantise_block endpoints") {
    auto cb = build_codebook(4);
    std::vector<float> vals{2.0f, -2.0f};
    auto [codes, scale] = quantise_block(vals, cb);
    CHECK(scale == 2.0f);
    CHECK(codes[0] == cb.num_levels() - 1);
    CHECK(codes[1] == 0);
}

TEST_CASE("quantise_block rejects non-finite input") {
    auto cb = build_codebook(4);
    std::vector<float> bad{1.0f, std::numeric_limits<float>::quiet_NaN()};
    CHECK_THROWS_AS(quantise_block(bad, cb), Error);
    std::vector<float> empty;
    CHECK_THROWS_AS(quantise_block(empty, cb), Error);
}

TEST_CASE("quantise_block matches exhaustive oracle and round-trip bound") {
    auto cb = build_codebook(4);
    Rng rng(11);
    Matrix block(1, 64);
    gaussian_fill(block, 0.0f, 1.0f, rng);
    auto [codes, scale] = quantise_block(block.data, cb);
    const double bound = scale * widest_gap(cb) / 2.0;
    for (size_t i = 0; i < block.size(); ++i) {
        const float x = block.data[i] / scale;
        CHECK(codes[i] == oracle_nearest(x, cb));
        const double deq = static_cast<double>(cb.levels[codes[i]]) * scale;
        CHECK(std::fabs(deq - block.data[i]) <= bound + 1e-9);
    }
}

TEST_CASE("quantise_matrix single element") {
    auto cb = build_codebook(4);
    Matrix m(1, 1);
    m.data = {5.0f};
    auto q = quantise_matrix(m, 64, cb);
    CHECK(q.scales.size() == 1);
    CHECK(q.scales[0] == 5.0f);
    auto codes = unpack_codes(q.codes, 4, 1);
    CHECK(codes[0] == cb.num_levels() - 1);
}

TEST_CASE("outlier confinement across blocks") {
    auto cb = build_codebook(4);
    Rng rng(13);
    Matrix m(4, 64);  // 4 blocks of 64
    gaussian_fill(m, 0.0f, 1.0f, rng);
    Matrix spiked = m;
    spiked.data[10] = 1000.0f;  // block 0 outlier
    auto q_clean = quantise_matrix(m, 64, cb);
    auto q_spiked = quantise_matrix(spiked, 64, cb);
    for (size_t b = 1; b < q_clean.scales.size(); ++b)
        CHECK(q_clean.scales[b] == q_spiked.scales[b]);
    auto c_clean = unpack_codes(q_clean.codes, 4, m.size());
    auto c_spiked = unpack_codes(q_spiked.codes, 4, m.size());
    for (size_t i = 64; i < m.size(); ++i) CHECK(c_clean[i] == c_spiked[i]);
}

TEST_CASE("quantise-dequantise-quantise is idempotent") {
    auto cb = build_codebook(4);
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix m(9, 31);  // short last block
        gaussian_fill(m, 0.0f, 0.1f, rng);
        auto q1 = quantise_matrix(m, 64, cb);
        auto q2 = quantise_matrix(dequantise(q1, cb), 64, cb);
        CHECK(q1 == q2);
    }
}

TEST_CASE("dequantise zero scale and representable levels") {
    auto cb = build_codebook(4);
    Matrix zeros(3, 5);
    auto q = quantise_matrix(zeros, 4, cb);
    Matrix back = dequantise(q, cb);
    for (float v : back.data) CHECK(v == 0.0f);

    // the level values themselves round-trip exactly at scale 1
    Matrix lv(1, 16);
    lv.data = cb.levels;
    auto ql = quantise_matrix(lv, 16, cb);
    Matrix lv_back = dequantise(ql, cb);
    CHECK(lv_back.data == cb.levels);
}

TEST_CASE("round-trip error tracks the exhaustive oracle") {
    auto cb = build_codebook(4);
    Rng rng(19);
    Matrix m(512, 512);
    gaussian_fill(m, 0.0f, 0.02f, rng);
    auto q = quantise_matrix(m, 64, cb);
    Matrix back = dequantise(q, cb);
    double impl_err = 0.0;
    for (size_t i = 0; i < m.size(); ++i)
        impl_err += std::fabs(back.data[i] - m.data[i]);
    impl_err /= static_cast<double>(m.size());

    // oracle: per block, brute-force nearest level on the same data
    double oracle_err = 0.0;
    for (size_t start = 0; start < m.size(); start += 64) {
        size_t len = std::min<size_t>(64, m.size() - start);
        float scale = 0.0f;
        for (size_t i = start; i < start + len; ++i)
            scale = std::max(scale, std::fabs(m.data[i]));
        for (size_t i = start; i < start + len; ++i) {
            int c = oracle_nearest(m.data[i] / scale, cb);
            oracle_err += std::fabs(static_cast<double>(cb.levels[c]) * scale - m.data[i]);
        }
    }
    oracle_err /= static_cast<double>(m.size());
    CHECK(impl_err == doctest::Approx(oracle_err).epsilon(0.2));
}

TEST_CASE("pack_codes k=4 nibble order") {
    std::vector<uint8_t> codes{0x3, 0xA};
    auto bytes = pack_codes(codes, 4);
    REQUIRE(bytes.size() == 1);
    CHECK(bytes[0] == 0xA3);
}

TEST_CASE("pack/unpack round trip property") {
    Rng rng(23);
    for (int k : {2, 3, 4, 5, 7}) {
        for (size_t len : {0u, 1u, 7u, 64u, 129u}) {
            std::vector<uint8_t> codes(len);
            for (auto& c : codes)
                c = static_cast<uint8_t>(rng.uniform_int(1u << k));
            auto bytes = pack_codes(codes, k);
            CHECK(unpack_codes(bytes, k, len) == codes);
        }
    }
}

TEST_CASE("pack padding and validation") {
    std::vector<uint8_t> codes{0xF, 0xF, 0xF};  // odd length, k=4
    auto bytes = pack_codes(codes, 4);
    REQUIRE(bytes.size() == 2);
    CHECK((bytes[1] >> 4) == 0);  // pad nibble zero
    CHECK_THROWS_AS(unpack_codes(bytes, 4, 5), Error);
    std::vector<uint8_t> big{16};
    CHECK_THROWS_AS(pack_codes(big, 4), Error);
}

TEST_CASE("compression_stats format arithmetic") {
    auto cb = build_codebook(4);
    Matrix m(512, 512);
    m.data.assign(m.size(), 1.0f);

    auto q64 = quantise_matrix(m, 64, cb);
    auto s64 = compression_stats(m.size(), q64, 0);
    CHECK(s64.raw_bytes == 1048576);
    CHECK(s64.quantised_bytes == 131072 + 16384);
    CHECK(s64.ratio == doctest::Approx(32.0 / (4.0 + 32.0 / 64.0)).epsilon(1e-9));

    auto q256 = quantise_matrix(m, 256, cb);
    auto s256 = compression_stats(m.size(), q256, 0);
    CHECK(s256.ratio == doctest::Approx(32.0 / (4.0 + 32.0 / 256.0)).epsilon(1e-9));
    CHECK(s256.ratio > s64.ratio);  // scale overhead shrinks
}

TEST_CASE("occupancy matches oracle Voronoi masses") {
    // 1e5-sample version of the acceptance occupancy check (same oracle)
    auto cb = build_codebook(4);
    const double scale = 4.0;
    Rng rng(31);
    const int n = 100000;
    std::vector<int> counts(16, 0);
    for (int i = 0; i < n; ++i) {
        float x = static_cast<float>(rng.normal(0.0, 1.0) / scale);
        counts[nearest_code(x, cb)]++;
    }
    auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
    for (int c = 0; c < 16; ++c) {
        double lo = c == 0 ? -1e18
                           : scale * 0.5 * (cb.levels[c - 1] + cb.levels[c]);
        double hi = c == 15 ? 1e18
                            : scale * 0.5 * (cb.levels[c] + cb.levels[c + 1]);
        double p = cdf(hi) - cdf(lo);
        double se = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::fabs(static_cast<double>(counts[c]) / n - p) <= 3.0 * se + 1e-12);
    }
}
