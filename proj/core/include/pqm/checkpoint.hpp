#pragma once

#include <string>
#include <vector>

#include "pqm/lora.hpp"
#include "pqm/model.hpp"
#include "pqm/speakers.hpp"

namespace pqm {

// Checkpoint format "PQM1": one container for FP32 and quantised models.
// Little-endian throughout. Layout:
//   magic "PQM1", version u32, vocab u32, classes u32, d_model u32, seed u64,
//   layer count u32, then per layer:
//     id string (u32 len + bytes), kind u8, quantised u8, lora_attached u8,
//     rows u32, cols u32,
//     FP32 weights as f32[rows*cols], or packed section
//       {k u8, block_size u32, scales f32[], codes bytes},
//     bias_len u32 + f32[bias_len]  (always FP32)

void save_checkpoint(const std::string& path, const ToyModel& model);
ToyModel load_checkpoint(const std::string& path);

/// Exact on-disk byte count of save_checkpoint's output; the basis for
/// whole-model compression ratios.
uint64_t model_file_bytes(const ToyModel& model);

// Adapter format "PQMA": speaker id, then per layer
//   {layer_id, d u32, k_dim u32, r u32, alpha f32, a f32[], b f32[]}.
void save_adapters(const std::string& path, const AdapterSet& set);
AdapterSet load_adapters(const std::string& path);

// Dataset files are JSON lines: {"label":..,"speaker_id":..,"split":..,"tokens":[..]}
struct NamedDataset {
    std::string speaker_id;
    AdaptationDataset data;
};

void save_datasets(const std::string& path, const std::vector<NamedDataset>& sets);
std::vector<NamedDataset> load_datasets(const std::string& path);

}  // namespace pqm
