#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pqm/model.hpp"

namespace pqm {

/// Resolved pipeline configuration. Loaded from a single JSON file;
/// unknown keys are rejected so typos fail loudly. CLI flags override
/// individual fields after loading.
struct PipelineConfig {
    // model
    int d_model = kStandardDModel;
    uint64_t model_seed = 1;

    // quantisation
    int bits = 4;
    int block_size = 64;
    QuantSelection select{true, true, true};

    // LoRA
    int rank = 4;
    float alpha = 4.0f;  // default alpha = rank => multiplier 1
    std::vector<std::string> attach{"fc1", "fc2"};

    // training budgets per stage
    int base_steps = 300;
    int pretrain_steps = 2000;
    int adapt_steps = 300;
    double lr = 1e-3;
    int batch_size = 8;
    OptimiserKind optimiser = OptimiserKind::adam;

    // data
    int pool_speakers = 50;
    int pool_utts = 20;
    int adapt_speakers = 5;
    int utterances = 150;

    // labels: "ground_truth", "self", or a teacher checkpoint path
    std::string label_source = "ground_truth";

    uint64_t seed = 1;

    void validate() const;

    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::string& path);
    nlohmann::json to_json() const;
    void save(const std::string& path) const;
};

}  // namespace pqm
