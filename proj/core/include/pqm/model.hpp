#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pqm/data.hpp"
#include "pqm/lora.hpp"
#include "pqm/nf4.hpp"

namespace pqm {

enum class LayerKind { embedding, conv1d, linear };

std::string layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& s);

/// One layer's parameters. Weights are FP32 or packed NF codes, never
/// both; biases always stay FP32. The dequantised cache is rebuilt lazily
/// and is bit-identical to dequantising on the fly.
struct Layer {
    std::string id;
    LayerKind kind = LayerKind::linear;
    bool lora_attached = false;
    bool quantised = false;
    Matrix weight;             // valid when !quantised
    QuantisedMatrix qweight;   // valid when quantised
    std::vector<float> bias;   // empty for the embedding

    int out_dim() const { return quantised ? qweight.rows : weight.rows; }
    int in_dim() const { return quantised ? qweight.cols : weight.cols; }

    mutable std::optional<Matrix> deq_cache;
    const Matrix& base_weight(const NormalFloatCodebook& cb) const;
    void invalidate_cache() { deq_cache.reset(); }
};

/// Sequence classifier with the three quantisable layer kinds:
/// token embedding -> depthwise conv1d (width 3, same padding, tanh)
/// -> two linear+tanh blocks -> mean pool over time -> linear head.
struct ToyModel {
    int vocab = 0;
    int classes = 0;
    int d_model = 0;
    uint64_t seed = 0;
    std::vector<Layer> layers;  // embed, conv, fc1, fc2, head

    Layer& layer(const std::string& id);
    const Layer& layer(const std::string& id) const;
    bool any_quantised() const;
    uint64_t total_params() const;
    uint64_t linear_params() const;
};

/// Task constants shared with the speaker simulator.
inline constexpr int kVocab = 64;
inline constexpr int kClasses = 10;
inline constexpr int kStandardDModel = 320;

/// Deterministic model construction; adapters attach to fc1 and fc2.
ToyModel build_model(int d_model, uint64_t seed);

/// Layer-kind selection for quantisation (Table-style flags).
struct QuantSelection {
    bool linear = false;
    bool conv = false;
    bool embed = false;

    bool any() const { return linear || conv || embed; }
    bool covers(LayerKind k) const;
};

/// Replaces the selected layer kinds' weights with packed NF codes and
/// reports whole-model byte accounting (checkpoint-format sizes).
/// Quantising an already-quantised model is rejected.
ToyModel quantise_model(const ToyModel& model, const QuantSelection& sel, int block_size,
                        const NormalFloatCodebook& cb, QuantStats* stats = nullptr);

/// Dequantises every packed layer back to FP32 (the FFT-on-quantised path).
ToyModel dequantise_model(const ToyModel& model, const NormalFloatCodebook& cb);

/// Forward pass over a batch of utterances; logits are classes x batch.
Matrix forward(const ToyModel& model, const std::vector<Utterance>& batch,
               const NormalFloatCodebook& cb, const AdapterSet* adapters = nullptr);

/// Mean softmax cross-entropy over the batch.
double loss(const ToyModel& model, const std::vector<Utterance>& batch,
            const NormalFloatCodebook& cb, const AdapterSet* adapters = nullptr);

enum class TrainMode { lora_only, full_finetune };
enum class OptimiserKind { sgd, adam };

struct TrainConfig {
    double lr = 1e-3;
    int steps = 300;
    int batch_size = 8;
    OptimiserKind optimiser = OptimiserKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;
    TrainMode mode = TrainMode::lora_only;

    void validate() const;
};

struct LossRecord {
    int step = 0;
    double train_loss = 0.0;
    double dev_loss = -1.0;  // < 0 when not evaluated at this step
};

struct TrainResult {
    std::vector<LossRecord> curve;
    double initial_dev_loss = 0.0;
    double final_dev_loss = 0.0;
};

/// Runs the training loop. lora_only updates only the given AdapterSet and
/// leaves every model parameter (including codes and scales) untouched;
/// full_finetune requires an FP32 model and updates all weights in place.
TrainResult train(ToyModel& model, AdapterSet* adapters,
                  const std::vector<Utterance>& train_set,
                  const std::vector<Utterance>& dev_set, const TrainConfig& cfg,
                  const NormalFloatCodebook& cb);

/// Percent of utterances misclassified, in [0, 100].
double evaluate(const ToyModel& model, const std::vector<Utterance>& dataset,
                const NormalFloatCodebook& cb, const AdapterSet* adapters = nullptr);

/// Argmax teacher labels per utterance, ties toward the lower class.
std::vector<int> pseudo_label(const ToyModel& teacher,
                              const std::vector<Utterance>& inputs,
                              const NormalFloatCodebook& cb,
                              const AdapterSet* adapters = nullptr);

/// Fresh adapters for every lora_attached layer of the model.
AdapterSet init_adapters(const ToyModel& model, int rank, float alpha, uint64_t seed,
                         const std::string& speaker_id);

}  // namespace pqm
