#include "pqm/speakers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pqm/error.hpp"
#include "pqm/model.hpp"

namespace pqm {

namespace {

constexpr uint64_t kConceptSeed = 0xC0DEC0DEULL;
constexpr float kNoiseStd = 0.8f;

// exp(S) by plain Taylor series; S is small (entries ~N(0, eps^2))
Matrix matrix_exp(const Matrix& s) {
    Matrix result = Matrix::identity(s.rows);
    Matrix term = Matrix::identity(s.rows);
    for (int n = 1; n <= 24; ++n) {
        term = scale(matmul(term, s), 1.0f / static_cast<float>(n));
        result = add(result, term);
    }
    return result;
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

const Matrix& class_prototypes() {
    static const Matrix protos = [] {
        Matrix m(kClasses, kLatentDim);
        Rng rng(splitmix64(kConceptSeed ^ 0x11));
        gaussian_fill(m, 0.0f, 1.0f, rng);
        return m;
    }();
    return protos;
}

const Matrix& token_anchors() {
    static const Matrix anchors = [] {
        Matrix m(kVocab, kLatentDim);
        Rng rng(splitmix64(kConceptSeed ^ 0x22));
        gaussian_fill(m, 0.0f, 1.0f, rng);
        return m;
    }();
    return anchors;
}

int label_of(const Matrix& latent) {
    if (latent.rows != kLatentDim)
        throw Error::validation("label_of: latent dim mismatch");
    std::vector<double> mean(kLatentDim, 0.0);
    for (int d = 0; d < kLatentDim; ++d) {
        double acc = 0.0;
        for (int t = 0; t < latent.cols; ++t) acc += latent.at(d, t);
        mean[d] = acc / latent.cols;
    }
    const Matrix& protos = class_prototypes();
    int best = 0;
    double best_score = 0.0;
    for (int c = 0; c < kClasses; ++c) {
        double score = 0.0;
        for (int d = 0; d < kLatentDim; ++d) score += protos.at(c, d) * mean[d];
        if (c == 0 || score > best_score) {
            best_score = score;
            best = c;
        }
    }
    return best;
}

SpeakerProfile make_profile(const std::string& id, uint64_t seed, float rotation_eps) {
    SpeakerProfile p;
    p.id = id;
    p.seed = seed;
    Rng rng(seed);
    p.gain.resize(kLatentDim);
    p.bias.resize(kLatentDim);
    for (auto& g : p.gain) g = static_cast<float>(0.5 + rng.uniform());
    for (auto& b : p.bias) b = static_cast<float>(rng.normal(0.0, 0.1));
    Matrix skew(kLatentDim, kLatentDim);
    for (int i = 0; i < kLatentDim; ++i)
        for (int j = i + 1; j < kLatentDim; ++j) {
            float v = static_cast<float>(rng.normal(0.0, rotation_eps));
            skew.at(i, j) = v;
            skew.at(j, i) = -v;
        }
    p.mix = matrix_exp(skew);
    return p;
}

SpeakerProfile identity_profile(const std::string& id) {
    SpeakerProfile p;
    p.id = id;
    p.seed = 0;
    p.gain.assign(kLatentDim, 1.0f);
    p.bias.assign(kLatentDim, 0.0f);
    p.mix = Matrix::identity(kLatentDim);
    return p;
}

SplitCounts split_counts(int n) {
    SplitCounts c;
    c.train = static_cast<int>(std::lround(0.4 * n));
    c.dev = static_cast<int>(std::lround(0.2 * n));
    c.test = n - c.train - c.dev;
    return c;
}

std::vector<Utterance> AdaptationDataset::subset(const std::vector<int>& idx) const {
    std::vector<Utterance> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(utterances[i]);
    return out;
}

AdaptationDataset generate_dataset(const SpeakerProfile& profile, int utts,
                                   uint64_t data_seed) {
    if (utts < 1) throw Error::validation("generate_dataset: utts must be >= 1");
    AdaptationDataset ds;
    ds.utterances.reserve(utts);
    const Matrix& protos = class_prototypes();
    const Matrix& anchors = token_anchors();
    Rng rng = Rng(data_seed).fork(0xDA7AULL);

    for (int u = 0; u < utts; ++u) {
        // clean latent sequence: class prototype plus per-step noise
        const int c = static_cast<int>(rng.uniform_int(kClasses));
        Matrix latent(kLatentDim, kSeqLen);
        for (int t = 0; t < kSeqLen; ++t)
            for (int d = 0; d < kLatentDim; ++d)
                latent.at(d, t) = static_cast<float>(protos.at(c, d) +
                                                     rng.normal(0.0, kNoiseStd));
        Utterance utt;
        utt.label = label_of(latent);

        // speaker warp, then nearest-anchor token assignment
        Matrix warped = matmul(profile.mix, latent);
        utt.tokens.resize(kSeqLen);
        for (int t = 0; t < kSeqLen; ++t) {
            int best = 0;
            double best_dist = 0.0;
            for (int a = 0; a < kVocab; ++a) {
                double dist = 0.0;
                for (int d = 0; d < kLatentDim; ++d) {
                    const double y = profile.gain[d] * warped.at(d, t) + profile.bias[d];
                    const double diff = y - anchors.at(a, d);
                    dist += diff * diff;
                }
                if (a == 0 || dist < best_dist) {
                    best_dist = dist;
                    best = a;
                }
            }
            utt.tokens[t] = best;
        }
        ds.utterances.push_back(std::move(utt));
    }

    // stable split assignment: order by hash of (speaker id, index)
    const int n = utts;
    SplitCounts counts = split_counts(n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const uint64_t id_hash = fnv1a(profile.id);
    std::vector<uint64_t> hashes(n);
    for (int i = 0; i < n; ++i) hashes[i] = splitmix64(id_hash ^ splitmix64(i));
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return hashes[a] != hashes[b] ? hashes[a] < hashes[b] : a < b;
    });
    for (int i = 0; i < n; ++i) {
        if (i < counts.train) ds.train.push_back(order[i]);
        else if (i < counts.train + counts.dev) ds.dev.push_back(order[i]);
        else ds.test.push_back(order[i]);
    }
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.dev.begin(), ds.dev.end());
    std::sort(ds.test.begin(), ds.test.end());
    return ds;
}

std::vector<std::pair<SpeakerProfile, AdaptationDataset>> generate_pool(
    int n_speakers, int utts_per_speaker, uint64_t seed) {
    if (n_speakers < 1) throw Error::validation("generate_pool: need >= 1 speaker");
    std::vector<std::pair<SpeakerProfile, AdaptationDataset>> pool;
    pool.reserve(n_speakers);
    for (int i = 0; i < n_speakers; ++i) {
        std::string id = "pool-" + std::to_string(i);
        SpeakerProfile p = make_profile(id, splitmix64(seed ^ splitmix64(0x5000 + i)));
        uint64_t data_seed = splitmix64(seed ^ splitmix64(0xD000 + i));
        pool.emplace_back(p, generate_dataset(p, utts_per_speaker, data_seed));
    }
    return pool;
}

std::vector<std::pair<SpeakerProfile, AdaptationDataset>> generate_adaptation_speakers(
    int n, int utts, uint64_t seed) {
    if (n < 1) throw Error::validation("generate_adaptation_speakers: need >= 1 speaker");
    if (utts < 5)
        throw Error::validation("generate_adaptation_speakers: utts must be >= 5");
    std::vector<std::pair<SpeakerProfile, AdaptationDataset>> speakers;
    speakers.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::string id = "spk-" + std::to_string(i);
        SpeakerProfile p = make_profile(id, splitmix64(seed ^ splitmix64(0xA000 + i)));
        uint64_t data_seed = splitmix64(seed ^ splitmix64(0xB000 + i));
        speakers.emplace_back(p, generate_dataset(p, utts, data_seed));
    }
    return speakers;
}

}  // namespace pqm
