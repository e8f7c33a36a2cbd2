#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pqm/data.hpp"
#include "pqm/matrix.hpp"

namespace pqm {

// Synthetic multi-speaker task: a shared label concept in a latent space,
// warped per speaker by an invertible affine transform before token
// discretisation. The concept (class prototypes, token anchor grid) is a
// fixed global constant, so labels never depend on the speaker.

inline constexpr int kLatentDim = 16;
inline constexpr int kSeqLen = 20;

/// Per-speaker input transform: y = gain .* (mix * z) + bias, with mix a
/// rotation (exp of a skew-symmetric matrix) and gains in [0.5, 1.5].
struct SpeakerProfile {
    std::string id;
    std::vector<float> gain;   // latent_dim, U[0.5, 1.5]
    std::vector<float> bias;   // latent_dim, N(0, 0.1)
    Matrix mix;                // latent_dim x latent_dim rotation
    uint64_t seed = 0;
};

struct AdaptationDataset {
    std::vector<Utterance> utterances;
    std::vector<int> train, dev, test;  // disjoint indices, 2:1:2 ratio

    std::vector<Utterance> subset(const std::vector<int>& idx) const;
};

/// Fixed class prototypes (classes x latent_dim); seed-independent.
const Matrix& class_prototypes();
/// Fixed token anchor grid (vocab x latent_dim); seed-independent.
const Matrix& token_anchors();

/// Label = argmax_c <prototype_c, mean_t z_t>, ties toward lower class.
/// This is the shared concept; it sees only the clean latent sequence.
int label_of(const Matrix& latent);  // latent_dim x seq_len

SpeakerProfile make_profile(const std::string& id, uint64_t seed,
                            float rotation_eps = 0.1f);

/// gain = 1, bias = 0, mix = I: tokens equal the clean concept data.
SpeakerProfile identity_profile(const std::string& id);

/// Draws `utts` utterances. Latent sequences depend only on data_seed, so
/// two profiles given the same data_seed see the same clean latents (and
/// hence identical labels). Splits are assigned 2:1:2 by a stable hash of
/// (speaker id, utterance index).
AdaptationDataset generate_dataset(const SpeakerProfile& profile, int utts,
                                   uint64_t data_seed);

/// Split counts for n utterances: round(0.4n) / round(0.2n) / remainder.
struct SplitCounts {
    int train, dev, test;
};
SplitCounts split_counts(int n);

/// Multi-speaker pool for base training and LoRA pretraining.
std::vector<std::pair<SpeakerProfile, AdaptationDataset>> generate_pool(
    int n_speakers, int utts_per_speaker, uint64_t seed);

/// Target speakers for per-speaker adaptation; utts must be >= 5 so every
/// split is nonempty.
std::vector<std::pair<SpeakerProfile, AdaptationDataset>> generate_adaptation_speakers(
    int n, int utts, uint64_t seed);

}  // namespace pqm
